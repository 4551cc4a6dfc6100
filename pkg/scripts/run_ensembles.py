"""Desk-scale ensemble comparison: bagging and stacking over seed groups.

For each requested ensemble size, trains one ensemble per seed, reports
member versus ensemble test error, and (when two sizes are given) runs
the paired Wilcoxon test between the size groups.

    python3 scripts/run_ensembles.py --data runs/digits --sizes 3,10
"""

import argparse
import statistics
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from resprop.data import load_splits_from_dir
from resprop.ensemble import EnsembleSpec, train_ensemble
from resprop.harness import parse_size_chain
from resprop.optimizers import RpropConfig
from resprop.stats import wilcoxon_signed_rank
from resprop.training import classification_error


def run_group(kind, size, args, splits, opt_cfg, dropout):
    spec = EnsembleSpec(kind, size, parse_size_chain(args.arch),
                        args.member_epochs, args.aggregation)
    ens_errs, med_member_errs = [], []
    for seed in (int(s) for s in args.seeds.split(",")):
        training = train_ensemble(
            spec, splits, opt_cfg, seed=seed, batch_size=args.batch_size,
            member_dropout=dropout,
        )
        member_errs = [classification_error(m, splits.test)
                       for m in training.model.members]
        ens_err = training.model.classification_error(splits.test)
        ens_errs.append(ens_err)
        med_member_errs.append(statistics.median(member_errs))
        print("  %s N=%d seed %d: members %s -> ensemble %.4f"
              % (kind, size, seed,
                 "/".join("%.4f" % e for e in member_errs), ens_err),
              flush=True)
    print("  %s N=%d medians: member %.4f, ensemble %.4f"
          % (kind, size, statistics.median(med_member_errs),
             statistics.median(ens_errs)), flush=True)
    return ens_errs


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True, help="directory with IDX files")
    ap.add_argument("--kind", default="bagging",
                    choices=("bagging", "stacking", "both"))
    ap.add_argument("--sizes", default="3",
                    help="comma-separated ensemble sizes, e.g. 3,10")
    ap.add_argument("--arch", default="784-300-100-10")
    ap.add_argument("--member-epochs", type=int, default=10)
    ap.add_argument("--batch-size", type=int, default=100)
    ap.add_argument("--seeds", default="1,2,3,4,5")
    ap.add_argument("--train-size", type=int, default=5000)
    ap.add_argument("--val-size", type=int, default=1000)
    ap.add_argument("--test-size", type=int, default=None)
    ap.add_argument("--dropout-hidden", type=float, default=0.5)
    ap.add_argument("--aggregation", default="probability-average",
                    choices=("probability-average", "majority-vote"))
    ap.add_argument("--eta-plus", type=float, default=1.2)
    ap.add_argument("--eta-minus", type=float, default=0.5)
    ap.add_argument("--delta-max", type=float, default=5.0)
    ap.add_argument("--delta-min", type=float, default=1e-3)
    ap.add_argument("--delta-init", type=float, default=3e-3)
    ap.add_argument("--confidence", type=float, default=0.98)
    args = ap.parse_args(argv)

    splits = load_splits_from_dir(args.data, args.train_size, args.val_size,
                                  args.test_size)
    opt_cfg = RpropConfig(args.eta_plus, args.eta_minus, args.delta_max,
                          args.delta_min, args.delta_init)
    from resprop.dropout import DropoutSpec
    spec = DropoutSpec.for_sizes(parse_size_chain(args.arch),
                                 args.dropout_hidden, 0.0)
    dropout = None if spec.is_off else spec

    kinds = ("bagging", "stacking") if args.kind == "both" else (args.kind,)
    sizes = [int(s) for s in args.sizes.split(",")]
    for kind in kinds:
        by_size = {}
        for size in sizes:
            by_size[size] = run_group(kind, size, args, splits, opt_cfg,
                                      dropout)
        if len(sizes) == 2:
            a, b = sizes
            res = wilcoxon_signed_rank(by_size[a], by_size[b],
                                       alternative="two-sided")
            verdict = ("significant" if res.significant(args.confidence)
                       else "not significant")
            print("%s N=%d vs N=%d: W+ = %g, p = %.6g (%s at %g%% confidence)"
                  % (kind, a, b, res.statistic, res.p_value, verdict,
                     100.0 * args.confidence), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
