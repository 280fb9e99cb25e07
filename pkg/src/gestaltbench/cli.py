"""Command-line entry point.

Verbs: gen (one round), curriculum (the A/C/D family), verify, eval,
curve, fuse, serve. Exit codes: 0 success, 1 the operation ran but the
result is a failure (oracle disagreements, failed curve points), 2 a
domain error, echoed on stderr as "<category>: <message>".
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import dataset, faces, learner
from .errors import GestaltError


def cmd_gen(args) -> int:
    man = dataset.emit_round(args.task, args.round, args.count,
                             args.seed, Path(args.out))
    print(f"wrote {man.path} counts={man.counts()}")
    return 0


def cmd_curriculum(args) -> int:
    mans = dataset.emit_curriculum(Path(args.out), args.seed,
                                   a1_count=args.a1, d_ratio=args.d_ratio,
                                   c1_count=args.c1)
    for name, man in mans.items():
        print(f"{name:6s} {man.path} counts={man.counts()}")
    return 0


def cmd_verify(args) -> int:
    man = dataset.Manifest.load(Path(args.manifest))
    report = dataset.verify_manifest(man, regen=args.regen,
                                     dump_dir=Path(args.dump) if args.dump else None)
    print(report.summary())
    return 0 if report.ok else 1


def cmd_eval(args) -> int:
    man = dataset.Manifest.load(Path(args.manifest))
    preds = dataset.read_predictions(Path(args.pred))
    metrics = dataset.evaluate(preds, man)
    print(metrics.summary())
    if args.csv:
        dataset.csv_export(metrics, Path(args.csv))
        print(f"wrote {args.csv}")
    return 0


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def cmd_curve(args) -> int:
    """Accuracy vs training-set size: train on the head of the train
    round, validate on its tail, evaluate on the eval round."""
    root = Path(args.root)
    train_man = dataset.Manifest.load(root / args.task / args.train_round)
    eval_man = dataset.Manifest.load(root / args.task / args.eval_round)
    side = args.side
    x, y = learner.manifest_arrays(train_man, side)
    xe, ye = learner.manifest_arrays(eval_man, side)
    per_class = min(int((y == 0).sum()), int((y == 1).sum()))

    rotate = args.rotate
    if rotate is None:
        # pixel-exact symmetry does not survive rotation
        rotate = 0.0 if args.task.startswith("symmetry") else 5.0
    augment = learner.AugmentConfig(rotation_deg=rotate)

    def run_point(size: int, seed: int) -> float:
        if size + args.val > per_class:
            raise dataset.DataError(
                f"size {size} + val {args.val} exceeds the {per_class} "
                f"per-class samples in {args.train_round}")
        take, hold = [], []
        for cls in (0, 1):
            idx = (y == cls).nonzero()[0]
            take.extend(idx[:size])
            hold.extend(idx[len(idx) - args.val:])
        model_cfg = learner.ModelConfig(input_side=side, seed=seed)
        train_cfg = learner.TrainConfig(epochs=args.epochs, batch_size=args.batch,
                                        lr=args.lr, augment=augment, seed=seed)
        ckpt = learner.train(model_cfg, train_cfg, x[take], y[take],
                             x[hold], y[hold])
        return 100.0 - learner.error_rate(ckpt.params, xe, ye)

    curve = dataset.learning_curve(_parse_ints(args.sizes), run_point,
                                   seeds=_parse_ints(args.seeds))
    for pt in curve:
        status = "FAILED" if pt.failed else f"{pt.accuracy:.2f}%"
        print(f"size {pt.size:6d}: {status}  per-seed {pt.per_seed}")
    if args.out:
        dataset.csv_export(curve, Path(args.out))
        print(f"wrote {args.out}")
    return 1 if any(pt.failed for pt in curve) else 0


def cmd_fuse(args) -> int:
    man = faces.fuse_pairs(Path(args.pairs), Path(args.out), sigma=args.sigma)
    print(f"wrote {man.path} counts={man.counts()}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Path(args.root),
                     log_dir=Path(args.logs) if args.logs else None,
                     static_dir=Path(args.static) if args.static else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gestaltbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="emit one round to disk")
    p.add_argument("--task", required=True)
    p.add_argument("--round", required=True)
    p.add_argument("--count", type=int, required=True,
                   help="total samples, labels alternate")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("curriculum",
                       help="emit a1/c1 plus the derived d-rounds and unions")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--a1", type=int, default=8000)
    p.add_argument("--c1", type=int, default=None)
    p.add_argument("--d-ratio", type=float, default=1.0)
    p.set_defaults(func=cmd_curriculum)

    p = sub.add_parser("verify", help="re-check files, digests and oracles")
    p.add_argument("--manifest", required=True)
    p.add_argument("--regen", action="store_true",
                   help="also regenerate every sample and compare digests")
    p.add_argument("--dump", default=None,
                   help="directory for oracle-disagreement images")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eval", help="score a predictions CSV against a manifest")
    p.add_argument("--pred", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--csv", default=None, help="write metrics as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curve", help="learning curve over training-set sizes")
    p.add_argument("--root", required=True, help="curriculum root directory")
    p.add_argument("--task", required=True)
    p.add_argument("--train-round", default="a1")
    p.add_argument("--eval-round", default="c1")
    p.add_argument("--sizes", required=True, help="per-class sizes, comma-separated")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--val", type=int, default=200, help="per-class validation holdout")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch", type=int, default=40)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--side", type=int, default=64)
    p.add_argument("--rotate", type=float, default=None,
                   help="augmentation rotation degrees (default: 0 for "
                        "symmetry tasks, 5 otherwise)")
    p.add_argument("--out", default=None, help="write the curve as CSV")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("fuse", help="build the face set from a pairing list")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, default=faces.DEFAULT_SIGMA)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("serve", help="run the trial HTTP service")
    p.add_argument("--root", required=True, help="dataset root directory")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--logs", default=None, help="session event-log directory")
    p.add_argument("--static", default=None, help="frontend bundle to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GestaltError as exc:
        print(f"{exc.category}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
