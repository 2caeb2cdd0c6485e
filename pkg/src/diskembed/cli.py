"""Command-line interface: ``diskembed {split,train,eval,reverse,verify}``.

Options can also come from a JSON file passed with ``--config``; explicit flags
override file values, which override built-in defaults. The resolved options
are echoed as ``config.json`` into each output directory.

Exit codes: 0 success, 1 validation or configuration error (including usage
errors), 2 I/O or file-format error, 3 property-verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dag as dagmod
from . import geometry, model, verify
from .errors import ConfigError, DiskEmbedError, FormatError
from .evaluation import EvalReport, evaluate_split, tune_on
from .fileio import atomic_directory, atomic_write_text

log = logging.getLogger("diskembed")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# option name -> (default, type); None default means required after merging
SPLIT_OPTIONS = {
    "edges": (None, str),
    "percent_nonbasic": (0.5, float),
    "valid_count": (100, int),
    "test_count": (100, int),
    "neg_ratio": (10, int),
    "seed": (0, int),
}
_TRAIN_DEFAULTS = model.TrainConfig()
TRAIN_OPTIONS = {
    "split": (None, str),
    "geometry": (None, str),
    "dim": (None, int),
    "margin": (_TRAIN_DEFAULTS.margin, float),
    "lr": (_TRAIN_DEFAULTS.learning_rate, float),
    "lambda": (_TRAIN_DEFAULTS.center_scale, float),
    "nu": (_TRAIN_DEFAULTS.radius_scale, float),
    "negatives": (_TRAIN_DEFAULTS.negatives_per_positive, int),
    "epochs": (_TRAIN_DEFAULTS.epochs, int),
    "batch_size": (_TRAIN_DEFAULTS.batch_size, int),
    "init_center_scale": (_TRAIN_DEFAULTS.init_center_scale, float),
    "init_radius": (_TRAIN_DEFAULTS.init_radius, float),
    "seed": (_TRAIN_DEFAULTS.seed, int),
}
EVAL_OPTIONS = {
    "checkpoint": (None, str),
    "split": (None, str),
    "on": ("test", str),
}
VERIFY_OPTIONS = {
    "trials": (1000, int),
    "seed": (0, int),
    "K": (0.1, float),
    "threads": (1, int),
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-") if name != "K" else "--K"


def _add_options(p: argparse.ArgumentParser, options: dict, helps: dict):
    for name, (default, typ) in options.items():
        extra = {"choices": ("test", "valid", "train")} if name == "on" else {}
        if name == "geometry":
            extra = {"choices": geometry.KINDS}
        shown = "required" if default is None else f"default {default}"
        p.add_argument(_flag(name), dest=name, type=typ, default=None,
                       help=f"{helps.get(name, '')} ({shown})".strip(), **extra)
    p.add_argument("--config", help="JSON file of option values; flags take precedence")


def resolve(args: argparse.Namespace, options: dict) -> dict:
    """Merge defaults, the optional JSON config file and explicit flags."""
    merged = {name: default for name, (default, _) in options.items()}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise OSError(f"cannot open config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - set(options))
        if unknown:
            raise ConfigError(f"unknown option(s) in config {path}: {', '.join(unknown)}")
        for k, v in data.items():
            typ = options[k][1]
            try:
                merged[k] = typ(v) if not (typ is int and isinstance(v, float) and not v.is_integer()) else v
            except (TypeError, ValueError):
                raise ConfigError(f"config option {k!r}: cannot convert {v!r}") from None
            if typ is int and not isinstance(merged[k], int):
                raise ConfigError(f"config option {k!r} must be an integer, got {v!r}")
    for name in options:
        val = getattr(args, name, None)
        if val is not None:
            merged[name] = val
    missing = [_flag(k) for k, v in merged.items() if v is None]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join(missing)}")
    return merged


def _config_json(command: str, resolved: dict) -> str:
    return json.dumps({"command": command, **resolved}, indent=2, sort_keys=True) + "\n"


def _read_text(path, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot open {what} {path}: {exc.strerror or exc}") from None


# --- subcommands -----------------------------------------------------------

def cmd_split(args) -> int:
    cfg = resolve(args, SPLIT_OPTIONS)
    graph = dagmod.parse_edge_list(_read_text(cfg["edges"], "edge file"))
    dataset = dagmod.split_dataset(
        graph, cfg["percent_nonbasic"], cfg["valid_count"], cfg["test_count"], cfg["neg_ratio"], cfg["seed"]
    )
    dagmod.write_split_manifest(dataset, args.out, {"config.json": _config_json("split", cfg)})
    c = dataset.counts()
    print(f"nodes {c['nodes']}")
    print(f"edges {c['edges']}")
    print(f"closure {c['closure']}")
    print(f"reduction {c['reduction']}")
    print(f"train {c['train_pos']}  valid {c['valid_pos']}+{c['valid_neg']}  test {c['test_pos']}+{c['test_neg']}")
    return EXIT_OK


def _space_for(name: str, dim: int) -> geometry.QuasiMetricSpace:
    if dim < (2 if name == geometry.SPHERE else 1):
        raise ConfigError(f"--dim {dim} is too small for {name}")
    return geometry.QuasiMetricSpace.from_name(name, dim)


def train_config_from(cfg: dict) -> model.TrainConfig:
    return model.TrainConfig(
        margin=cfg["margin"],
        learning_rate=cfg["lr"],
        center_scale=cfg["lambda"],
        radius_scale=cfg["nu"],
        negatives_per_positive=cfg["negatives"],
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        init_center_scale=cfg["init_center_scale"],
        init_radius=cfg["init_radius"],
        seed=cfg["seed"],
    )


def cmd_train(args) -> int:
    cfg = resolve(args, TRAIN_OPTIONS)
    if cfg["geometry"] not in geometry.KINDS:
        raise ConfigError(f"unknown geometry {cfg['geometry']!r}")
    space = _space_for(cfg["geometry"], cfg["dim"])
    tc = train_config_from(cfg)
    dataset = dagmod.read_split_manifest(cfg["split"])
    table, report = model.train(dataset, space, tc)
    with atomic_directory(args.out) as tmp:
        (tmp / "checkpoint.jsonl").write_text(model.checkpoint_text(table), encoding="utf-8")
        (tmp / "metrics.csv").write_text(report.metrics_csv(), encoding="utf-8")
        (tmp / "config.json").write_text(_config_json("train", cfg), encoding="utf-8")
    if report.records:
        last = report.records[-1]
        print(f"epochs {last.epoch}  mean_loss {last.mean_loss:.6f}  valid_f1 {last.valid_f1:.4f}  tau {last.tau:.6g}")
    else:
        print("epochs 0  (checkpoint holds the seeded initialization)")
    return EXIT_OK


def _eval_pairs(dataset, which: str):
    if which == "test":
        return dataset.test_pos, dataset.test_neg
    if which == "valid":
        return dataset.valid_pos, dataset.valid_neg
    # training positives against every held-out negative
    return dataset.train_pos, np.concatenate([dataset.valid_neg, dataset.test_neg])


def cmd_eval(args) -> int:
    cfg = resolve(args, EVAL_OPTIONS)
    table = model.load_checkpoint(_checked_path(cfg["checkpoint"], "checkpoint"))
    dataset = dagmod.read_split_manifest(cfg["split"])
    if dataset.node_names != table.node_names:
        raise FormatError("checkpoint node list does not match the split manifest")
    if len(dataset.valid_pos) and len(dataset.valid_neg):
        tau = tune_on(table, dataset.valid_pos, dataset.valid_neg)
    else:
        log.warning("no validation pairs of both classes; using tau = 0")
        tau = 0.0
    pos, neg = _eval_pairs(dataset, cfg["on"])
    if not len(pos) + len(neg):
        raise ConfigError(f"the {cfg['on']} split has no pairs to evaluate")
    tuned = evaluate_split(table, pos, neg, tau, cfg["on"])
    at_zero = evaluate_split(table, pos, neg, 0.0, f"{cfg['on']}@tau0")
    csv = "\n".join([EvalReport.csv_header(), tuned.to_csv_row(), at_zero.to_csv_row()]) + "\n"
    with atomic_directory(args.out) as tmp:
        (tmp / "report.json").write_text(tuned.to_json() + "\n", encoding="utf-8")
        (tmp / "report.csv").write_text(csv, encoding="utf-8")
        (tmp / "config.json").write_text(_config_json("eval", cfg), encoding="utf-8")
    print(tuned.to_json())
    print(f"f1 at tau=0: {at_zero.f1:.6f}", file=sys.stderr)
    return EXIT_OK


def _checked_path(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise OSError(f"cannot open {what} {p}")
    return p


def cmd_reverse(args) -> int:
    graph = dagmod.parse_edge_list(_read_text(args.edges, "edge file"))
    atomic_write_text(args.out, dagmod.format_edge_list(dagmod.reverse(graph)))
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = resolve(args, VERIFY_OPTIONS)
    if cfg["trials"] < 1:
        raise UsageError("verify: --trials must be at least 1")
    if cfg["threads"] < 1:
        raise UsageError("verify: --threads must be at least 1")
    results = verify.run_all(cfg["trials"], cfg["seed"], cfg["K"], cfg["threads"], args.inject_fault)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed: {'; '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all {len(results)} properties passed")
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="diskembed", description="Disk embeddings of DAGs in quasi-metric spaces.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("split", help="build a train/valid/test manifest from an edge list")
    _add_options(s, SPLIT_OPTIONS, {
        "edges": "child<TAB>parent edge file",
        "percent_nonbasic": "fraction of non-basic closure pairs used for training",
        "valid_count": "validation positives",
        "test_count": "test positives",
        "neg_ratio": "negatives per held-out positive",
        "seed": "random seed",
    })
    s.add_argument("--out", required=True, help="manifest directory to write")
    s.set_defaults(func=cmd_split)

    t = sub.add_parser("train", help="train disk embeddings on a split manifest")
    _add_options(t, TRAIN_OPTIONS, {
        "split": "split manifest directory",
        "geometry": "embedding space",
        "dim": "coordinates (euclidean, polyhedral, sphere) or intrinsic dimension (lorentz)",
        "margin": "negative-pair margin",
        "lr": "learning rate",
        "lambda": "center step scale",
        "nu": "radius step scale",
        "negatives": "negatives sampled per positive per epoch",
        "epochs": "training epochs",
        "batch_size": "samples per kernel call",
        "init_center_scale": "spread of initial centers",
        "init_radius": "initial radius",
        "seed": "random seed",
    })
    t.add_argument("--out", required=True, help="output directory (checkpoint, metrics, config)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a split manifest")
    _add_options(e, EVAL_OPTIONS, {
        "checkpoint": "checkpoint file written by train",
        "split": "split manifest directory",
        "on": "pairs to report on",
    })
    e.add_argument("--out", required=True, help="report directory")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("reverse", help="swap child and parent in an edge list")
    r.add_argument("--edges", required=True, help="input edge file")
    r.add_argument("--out", required=True, help="output edge file")
    r.set_defaults(func=cmd_reverse)

    v = sub.add_parser("verify", help="run the randomized property suites")
    _add_options(v, VERIFY_OPTIONS, {
        "trials": "random cases per property",
        "seed": "random seed",
        "K": "cone constant",
        "threads": "worker threads",
    })
    v.add_argument("--inject-fault", choices=verify.FAULTS, default=None, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    stage = args.command
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except FormatError as exc:
        print(f"{stage}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"{stage}: {exc}", file=sys.stderr)
        return EXIT_IO
    except DiskEmbedError as exc:
        print(f"{stage}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
