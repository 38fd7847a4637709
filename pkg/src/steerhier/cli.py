"""Command-line surface: gen / train / map / predict / demo-hidden.

Exit codes: 0 success, 1 runtime or I/O failure, 2 configuration error.
A ``--config`` file of key=value lines overrides the corresponding flags;
unknown keys are rejected.  ``STEERHIER_THREADS`` is the fallback thread
count when ``--threads`` is not given.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import atlas, mlp, protocol
from .features import SCHEMES
from .qcore import ValidationError

__all__ = ["main"]


class _ConfigError(Exception):
    pass


def _apply_config(args: argparse.Namespace, path: str) -> None:
    """Override parsed flags from a key=value file; unknown keys rejected."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise _ConfigError(f"cannot read config {path}: {exc}") from exc
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _ConfigError(f"malformed config line: {raw.rstrip()}")
        key, value = (t.strip() for t in line.split("=", 1))
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in ("config", "func"):
            raise _ConfigError(f"unknown config key: {key}")
        current = getattr(args, attr)
        if isinstance(current, bool):
            setattr(args, attr, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(args, attr, int(value))
        elif isinstance(current, float):
            setattr(args, attr, float(value))
        else:
            setattr(args, attr, value)


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("STEERHIER_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise _ConfigError(f"bad STEERHIER_THREADS value {env!r}") from exc
    return os.cpu_count() or 1


def _protocol_config(args) -> protocol.ProtocolConfig:
    if args.preset == "desk":
        return protocol.ProtocolConfig.desk(master_seed=args.seed)
    if args.preset == "paper":
        return protocol.ProtocolConfig.paper(master_seed=args.seed)
    raise _ConfigError(f"unknown preset {args.preset!r} (expected desk or paper)")


def _cmd_gen(args) -> int:
    cfg = _protocol_config(args)
    if args.count >= 100_000:
        print(f"warning: {args.count} states at preset {args.preset} "
              "is a long-running job", file=sys.stderr)
    stats = protocol.generate_dataset(
        args.count, cfg, args.out, threads=_threads(args),
        emit_certs=args.emit_certs,
    )
    for label in protocol.LABELS:
        print(f"{label:8s} {stats['histogram'][label]}")
    print(f"written  {stats['written']}")
    return 0


def _cmd_train(args) -> int:
    if args.scheme not in SCHEMES:
        raise _ConfigError(
            f"unknown scheme {args.scheme!r}; valid: {', '.join(SCHEMES)}"
        )
    _, records = protocol.read_dataset(args.data)
    cfg = mlp.TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size,
        learning_rate=args.learning_rate, seed=args.seed,
    )
    try:
        hidden = tuple(int(t) for t in args.hidden.split(","))
    except ValueError as exc:
        raise _ConfigError(f"bad hidden spec {args.hidden!r}") from exc
    log: list = []
    model = mlp.train(records, args.scheme, cfg, hidden_sizes=hidden, log=log)
    mlp.save_model(model, args.out)
    best_val = max(acc for _, acc in log) if log else float("nan")
    print(f"validation accuracy {best_val:.4f}")
    if args.eval_after:
        _, _, test = mlp.split_masks([r.seed for r in records])
        held_out = [r for r, m in zip(records, test) if m]
        report = mlp.evaluate(model, held_out)
        print(f"test accuracy {report.overall_accuracy:.4f}")
        for lab in mlp.CLASS_LABELS:
            print(f"  {lab:4s} {report.per_label_accuracy[lab]:.4f}")
        print("confusion (rows = true):")
        for row in report.confusion:
            print("  " + " ".join(f"{v:6d}" for v in row))
    return 0


def _cmd_map(args) -> int:
    try:
        n_xi, n_q = (int(t) for t in args.grid.lower().split("x"))
    except ValueError as exc:
        raise _ConfigError(f"bad grid spec {args.grid!r}, expected NxM") from exc
    if args.source == "model":
        if args.model is None:
            raise _ConfigError("--source model requires --model")
        model = mlp.load_model(args.model)
        grid = atlas.compute_map(args.family, n_xi, n_q, "model", model=model)
    else:
        grid = atlas.compute_map(
            args.family, n_xi, n_q, "protocol",
            cfg=_protocol_config(args), master_seed=args.seed,
        )
    atlas.write_map(grid, args.out)
    if args.svg:
        borders = [
            atlas.extract_border(grid, lv) for lv in ("MS2", "MS3", "MS4")
        ]
        atlas.write_svg(grid, args.svg, borders=borders)
    print(f"map {n_xi}x{n_q} family={args.family} source={grid.source} -> {args.out}")
    return 0


def _cmd_predict(args) -> int:
    model = mlp.load_model(args.model)
    values = [float(t) for t in args.theta.replace(",", " ").split()]
    if len(values) != 15:
        raise _ConfigError(f"expected 15 theta values, got {len(values)}")
    rho = protocol.state_from_theta_row(values)
    from .features import encode
    probs = mlp.forward(model, encode(rho, model.scheme).values)
    label = mlp.CLASS_LABELS[int(np.argmax(probs))]
    print(label + " " + " ".join(f"{p:.6f}" for p in probs))
    return 0


def _cmd_demo_hidden(args) -> int:
    report = atlas.hidden_steer_demo(args.q, args.xi, cfg=_protocol_config(args))
    print(f"q = {report['q']}, xi = {report['xi']}")
    print(f"canonicalization error vs Werner: {report['canonicalization_error']:.3e}")
    print(f"EllB9 feature gap vs Werner:      {report['ellb9_feature_error']:.3e}")
    print(f"label(type-2) = {report['label_type2']}, "
          f"label(Werner) = {report['label_werner']}")
    print("steering activated by the Alice-side filter: "
          + ("yes" if report["activated"] else "no"))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="steerhier")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--preset", default="desk")
        p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("gen", help="generate a labeled dataset")
    common(p)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--emit-certs", default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train", help="train a classifier on a dataset")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--scheme", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=600)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=0.02)
    p.add_argument("--hidden", default="256,128",
                   help="comma-separated hidden layer sizes")
    p.add_argument("--eval-after", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("map", help="compute a hierarchy map")
    common(p)
    p.add_argument("--family", type=int, choices=(1, 2), required=True)
    p.add_argument("--source", choices=("protocol", "model"), default="protocol")
    p.add_argument("--model", default=None)
    p.add_argument("--grid", default="32x32")
    p.add_argument("--out", required=True)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("predict", help="predict the label of one state")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--theta", required=True,
                   help="15 correlation-matrix entries, comma or space separated")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("demo-hidden", help="hidden-steerability demonstration")
    common(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--xi", type=float, required=True)
    p.set_defaults(func=_cmd_demo_hidden)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.config:
            _apply_config(args, args.config)
        return args.func(args)
    except (_ConfigError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
