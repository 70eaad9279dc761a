"""Command-line entry point: ``synth``, ``train``, ``gridsearch`` and ``probe``.

Values come from built-in defaults, then an optional ``--config`` JSON file
(keys are the flag names with dashes replaced by underscores), then explicit
flags. The resolved values are echoed into every report.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .augment import AugmentationParams
from .dataset import load_dataset, save_dataset
from .encoders import ARCHITECTURES, EncoderConfig, load_checkpoint, save_checkpoint
from .errors import ConfigError, DimensionError, GraphBarlowError
from .graph import make_splits
from .plotting import plot_grid_table, plot_loss_history, plot_split_scores
from .probe import COARSE_GRID, DENSE_GRID, PROBE_STEPS, evaluate_embeddings
from .sbm import SbmConfig, generate_sbm
from .search import DEFAULT_AUG_GRID, augmentation_grid_search
from .training import TrainConfig, embed, train

REPORT_VERSION = 1
SEED_OFFSETS = {"data": 0, "model": 1000, "probe": 2000}


def derive_seeds(master):
    """Independent stream seeds for data generation, encoder/augmentation and probe."""
    return {k: int(master) + off for k, off in SEED_OFFSETS.items()}


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in _floats(text)]


def _probe_grid(value):
    if value in ("dense", None):
        return list(DENSE_GRID)
    if value == "coarse":
        return list(COARSE_GRID)
    return _floats(value)


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------
def _common(p):
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", required=False, help="output directory")
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (grid search only)")
    p.add_argument("--no-figures", action="store_true", help="skip matplotlib figures")


def _train_flags(p):
    g = p.add_argument_group("encoder and training")
    g.add_argument("--arch", choices=ARCHITECTURES, default="gcn2")
    g.add_argument("--dim", type=int, default=16, help="embedding dimension d")
    g.add_argument("--hidden", default="256,256", help="gat3 per-head sizes of layers 1-2")
    g.add_argument("--heads", default="4,4,6", help="gat3 head counts")
    g.add_argument("--bn-momentum", type=float, default=0.01)
    g.add_argument("--loss", choices=("bt", "hsic"), default="bt")
    g.add_argument("--epochs", type=int, default=500)
    g.add_argument("--warmup", type=int, default=50)
    g.add_argument("--lr", type=float, default=5e-4)
    g.add_argument("--weight-decay", type=float, default=1e-5)
    g.add_argument("--lam", type=float, default=None, help="off-diagonal weight (default 1/d)")
    g.add_argument("--p-a", type=float, default=0.2, help="edge drop probability")
    g.add_argument("--p-x", type=float, default=0.2, help="feature mask probability")


def _probe_flags(p):
    g = p.add_argument_group("linear probe")
    g.add_argument("--metric", choices=("auto", "accuracy", "micro_f1"), default="auto")
    g.add_argument("--probe-grid", default="dense", help="dense, coarse, or comma-separated values")
    g.add_argument("--probe-steps", type=int, default=PROBE_STEPS)
    g.add_argument("--num-splits", type=int, default=5, help="splits to generate if the dataset has none")
    g.add_argument("--max-splits", type=int, default=0, help="use only the first N dataset splits (0 = all)")
    g.add_argument("--split-ratios", default="0.1,0.1,0.8")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="graph-barlow",
        description="Negative-sample-free self-supervised node embeddings and linear evaluation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("synth", help="generate an SBM dataset directory")
    _common(p)
    p.add_argument("--nodes", type=int, default=300)
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--p-in", type=float, default=0.1)
    p.add_argument("--p-out", type=float, default=0.01)
    p.add_argument("--features", type=int, default=16)
    p.add_argument("--signal", type=float, default=0.5)
    p.add_argument("--splits", type=int, default=20, help="number of random splits to store")
    p.add_argument("--split-ratios", default="0.1,0.1,0.8")
    p.set_defaults(func=cmd_synth)
    subs["synth"] = p

    p = sub.add_parser("train", help="self-supervised training plus linear evaluation")
    _common(p)
    p.add_argument("--data", required=False)
    p.add_argument("--eval-interval", type=int, default=0, help="evaluate every N epochs (0 = start and end only)")
    _train_flags(p)
    _probe_flags(p)
    p.set_defaults(func=cmd_train)
    subs["train"] = p

    p = sub.add_parser("gridsearch", help="search augmentation probabilities")
    _common(p)
    p.add_argument("--data", required=False)
    p.add_argument("--grid-a", default=",".join(f"{v:g}" for v in DEFAULT_AUG_GRID))
    p.add_argument("--grid-x", default=",".join(f"{v:g}" for v in DEFAULT_AUG_GRID))
    _train_flags(p)
    _probe_flags(p)
    p.set_defaults(func=cmd_gridsearch)
    subs["gridsearch"] = p

    p = sub.add_parser("probe", help="linear evaluation of a saved encoder")
    _common(p)
    p.add_argument("--data", required=False)
    p.add_argument("--checkpoint", required=False)
    _probe_flags(p)
    p.set_defaults(func=cmd_probe)
    subs["probe"] = p
    return parser, subs


def parse_args(argv=None):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        path = Path(args.config)
        try:
            values = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"{path}: config file not found") from None
        except ValueError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: top level must be an object")
        sub = subs[args.command]
        known = {a.dest for a in sub._actions} - {"help", "config", "func"}
        for key in values:
            if key not in known:
                raise ConfigError(f"{path}: unknown field {key!r} for '{args.command}'")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    for name in ("out",) + (("data",) if args.command != "synth" else ()):
        if getattr(args, name, None) is None:
            raise ConfigError(f"--{name} is required (flag or config field {name!r})")
    if args.command == "probe" and args.checkpoint is None:
        raise ConfigError("--checkpoint is required (flag or config field 'checkpoint')")
    return args


def resolved_config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


# ----------------------------------------------------------------------
# shared helpers
# ----------------------------------------------------------------------
def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")
    return path


def _encoder_config(args, in_dim):
    return EncoderConfig(
        arch=args.arch,
        in_dim=in_dim,
        emb_dim=args.dim,
        hidden=tuple(_ints(args.hidden)),
        heads=tuple(_ints(args.heads)),
        bn_momentum=args.bn_momentum,
    )


def _train_config(args, seeds):
    return TrainConfig(
        augmentation=AugmentationParams(args.p_a, args.p_x),
        loss=args.loss,
        epochs=args.epochs,
        warmup=args.warmup,
        lr=args.lr,
        weight_decay=args.weight_decay,
        seed=seeds["model"],
        eval_interval=getattr(args, "eval_interval", 0),
        lam=args.lam,
    )


def _load(args, seeds):
    graph, splits = load_dataset(args.data)
    if graph.labels is None:
        raise ConfigError(f"{args.data}: dataset has no labels; evaluation needs labels")
    if not splits:
        splits = make_splits(graph.num_nodes, _floats(args.split_ratios), seeds["data"] + 1, args.num_splits)
    elif args.max_splits:
        splits = splits[: args.max_splits]
    metric = args.metric
    if metric == "auto":
        metric = "micro_f1" if graph.multilabel else "accuracy"
    return graph, splits, metric


def _evaluate(z, graph, splits, metric, args, seeds):
    return evaluate_embeddings(
        z,
        graph.labels,
        splits,
        metric=metric,
        grid=_probe_grid(args.probe_grid),
        multilabel=graph.multilabel,
        num_classes=graph.num_classes,
        steps=args.probe_steps,
        seed=seeds["probe"],
    )


def _finish(out, outputs):
    missing = [str(p) for p in outputs if not Path(p).exists()]
    if missing:
        raise GraphBarlowError(f"declared outputs were not written: {missing}")
    for p in outputs:
        print(p)
    return 0


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def cmd_synth(args):
    seeds = derive_seeds(args.seed)
    cfg = SbmConfig(args.nodes, args.blocks, args.p_in, args.p_out, args.features, args.signal)
    graph = generate_sbm(cfg, seed=seeds["data"])
    splits = make_splits(graph.num_nodes, _floats(args.split_ratios), seeds["data"] + 1, args.splits)
    out = Path(args.out)
    save_dataset(graph, out, splits)
    _write_json(out / "synth.json", {"format_version": REPORT_VERSION, "command": "synth",
                                     "config": resolved_config(args), "sbm": cfg.to_dict(),
                                     "num_edges": graph.num_edges})
    names = ["meta.json", "features.f32", "edges.u32", "labels.u32", "splits.json", "synth.json"]
    return _finish(out, [out / n for n in names])


def cmd_train(args):
    seeds = derive_seeds(args.seed)
    graph, splits, metric = _load(args, seeds)
    enc_cfg = _encoder_config(args, graph.num_features)
    cfg = _train_config(args, seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    best = {}

    def evaluate(epoch, encoder):
        rep = _evaluate(embed(encoder, graph), graph, splits, metric, args, seeds)
        if not best or rep.val_mean > best["report"].val_mean:
            best.update(epoch=epoch, report=rep, encoder=encoder.copy())
        return rep

    result = train(graph, enc_cfg, cfg, evaluate=evaluate)
    rep = best["report"]

    ckpt = save_checkpoint(best["encoder"], out / "encoder.ckpt",
                           extra={"epoch": best["epoch"], "train": cfg.to_dict()})
    hist = out / "loss_history.jsonl"
    hist.write_text("".join(json.dumps(h) + "\n" for h in result.history))
    report = {
        "format_version": REPORT_VERSION,
        "command": "train",
        "config": resolved_config(args),
        "seeds": seeds,
        "encoder": enc_cfg.to_dict(),
        "train": cfg.to_dict(),
        "metric": metric,
        "mean": rep.mean,
        "std": rep.std,
        "val_mean": rep.val_mean,
        "best_epoch": best["epoch"],
        "test_scores": rep.test_scores,
        "val_scores": rep.val_scores,
        "regs": rep.regs,
        "evaluations": [
            {"epoch": ep, "mean": r.mean, "std": r.std, "val_mean": r.val_mean}
            for ep, r in result.evaluations
        ],
        "final_loss": result.history[-1]["loss"] if result.history else None,
    }
    outputs = [ckpt, hist, _write_json(out / "report.json", report)]
    if not args.no_figures:
        outputs.append(plot_loss_history(result.history, out / "loss_curve.png", result.evaluations,
                                         title=f"{args.loss} / {args.arch}"))
        outputs.append(plot_split_scores(report, out / "split_scores.png"))
    return _finish(out, outputs)


def cmd_gridsearch(args):
    seeds = derive_seeds(args.seed)
    graph, splits, metric = _load(args, seeds)
    enc_cfg = _encoder_config(args, graph.num_features)
    cfg = _train_config(args, seeds)
    best, table = augmentation_grid_search(
        graph,
        enc_cfg,
        cfg,
        grid_a=_floats(args.grid_a),
        grid_x=_floats(args.grid_x),
        splits=splits,
        metric=metric,
        probe_grid=_probe_grid(args.probe_grid),
        probe_seed=seeds["probe"],
        jobs=args.jobs,
    )
    best_row = next(r for r in table if r["p_a"] == best.p_a and r["p_x"] == best.p_x)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "format_version": REPORT_VERSION,
        "command": "gridsearch",
        "config": resolved_config(args),
        "seeds": seeds,
        "metric": metric,
        "grid": table,
        "best": best_row,
    }
    outputs = [_write_json(out / "grid.json", doc)]
    if not args.no_figures:
        outputs.append(plot_grid_table(table, out / "grid_heatmap.png", title=f"{args.loss}: validation {metric}"))
    return _finish(out, outputs)


def cmd_probe(args):
    seeds = derive_seeds(args.seed)
    graph, splits, metric = _load(args, seeds)
    encoder, header = load_checkpoint(args.checkpoint)
    if encoder.config.in_dim != graph.num_features:
        raise DimensionError(
            f"checkpoint expects {encoder.config.in_dim} features, dataset {args.data} has {graph.num_features}"
        )
    rep = _evaluate(embed(encoder, graph), graph, splits, metric, args, seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "format_version": REPORT_VERSION,
        "command": "probe",
        "config": resolved_config(args),
        "seeds": seeds,
        "encoder": header["encoder"],
        **rep.to_dict(),
    }
    outputs = [_write_json(out / "report.json", report)]
    if not args.no_figures:
        outputs.append(plot_split_scores(report, out / "split_scores.png"))
    return _finish(out, outputs)


def main(argv=None):
    try:
        args = parse_args(argv)
        return args.func(args)
    except (GraphBarlowError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
