"""Desk-scale single-model comparison: SGD vs Rprop vs dropout-aware Rprop.

Trains each optimizer over the same seeds, data split, and architecture,
writes one artifact directory per model, and prints the median summary
table plus a paired Wilcoxon verdict for the two Rprop variants.

    python3 scripts/run_singles.py --data runs/digits --out runs/singles

Generate a corpus first if needed:  resprop synth --out runs/digits
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from resprop.harness import (
    ExperimentConfig,
    compare_runs,
    format_comparison,
    format_summary_table,
    parse_size_chain,
    run_experiment,
)


def build_config(args, optimizer: str) -> ExperimentConfig:
    return ExperimentConfig(
        sizes=parse_size_chain(args.arch),
        optimizer=optimizer,
        learning_rate=args.learning_rate,
        eta_plus=args.eta_plus,
        eta_minus=args.eta_minus,
        delta_max=args.delta_max,
        delta_min=args.delta_min,
        delta_init=args.delta_init,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        dropout_hidden=args.dropout_hidden,
        data_dir=args.data,
        train_size=args.train_size,
        val_size=args.val_size,
        test_size=args.test_size,
        out_dir=str(Path(args.out) / optimizer),
    )


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True, help="directory with IDX files")
    ap.add_argument("--out", default="runs/singles")
    ap.add_argument("--arch", default="784-300-100-10")
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--batch-size", type=int, default=100)
    ap.add_argument("--seeds", default="1,2,3,4,5")
    ap.add_argument("--train-size", type=int, default=5000)
    ap.add_argument("--val-size", type=int, default=1000)
    ap.add_argument("--test-size", type=int, default=None)
    ap.add_argument("--dropout-hidden", type=float, default=0.5)
    ap.add_argument("--learning-rate", type=float, default=0.01,
                    help="sgd step size")
    ap.add_argument("--eta-plus", type=float, default=1.2)
    ap.add_argument("--eta-minus", type=float, default=0.5)
    ap.add_argument("--delta-max", type=float, default=5.0)
    ap.add_argument("--delta-min", type=float, default=1e-3)
    ap.add_argument("--delta-init", type=float, default=3e-3)
    ap.add_argument("--confidence", type=float, default=0.98)
    args = ap.parse_args(argv)

    groups = []
    results = {}
    for optimizer in ("sgd", "rprop", "mod-rprop"):
        cfg = build_config(args, optimizer)
        print(f"training {optimizer} over seeds {cfg.seeds} ...", flush=True)
        exp = run_experiment(cfg, label=optimizer)
        results[optimizer] = exp
        groups.append((optimizer, exp.summaries()))
        for rec in exp.records:
            print("  seed %d: 1st epoch %.4f, best %.4f @ epoch %d, test %.4f"
                  % (rec.seed, rec.first_epoch_val_err, rec.best_val_err,
                     rec.best_epoch, rec.test_err_at_best), flush=True)

    table = format_summary_table(groups)
    verdict = format_comparison(compare_runs(
        results["mod-rprop"].summaries(), results["rprop"].summaries(),
        confidence=args.confidence, label_a="mod-rprop", label_b="rprop"))
    print()
    print(table)
    print(verdict)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.txt").write_text(table + "\n" + verdict)
    return 0


if __name__ == "__main__":
    sys.exit(main())
