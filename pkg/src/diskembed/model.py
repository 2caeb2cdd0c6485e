"""Embedding table, margin loss, negative sampling and the RSGD trainer.

Storage convention: a pair ``(i, j)`` means node ``i`` is-a node ``j``, so the
energy of the pair is the protrusion of the ancestor disk ``j`` over the
descendant disk ``i``::

    E_ij = d(x_j, x_i) - r_j + r_i

and a positive pair is satisfied when ``E_ij <= 0``.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import geometry, kernels
from .constants import MAX_NEGATIVE_ATTEMPTS
from .dag import PairSet
from .disks import FormalDisk, protrusion
from .errors import ConfigError, DegenerateGradientError, FormatError, InvalidArgumentError
from .evaluation import evaluate_split, tune_on
from .fileio import atomic_write_text

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    margin: float = 0.1
    learning_rate: float = 0.01
    center_scale: float = 1.0
    radius_scale: float = 1.0
    negatives_per_positive: int = 10
    epochs: int = 300
    batch_size: int = 4096
    init_center_scale: float = 0.1
    init_radius: float = 0.1
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("margin", "learning_rate", "center_scale", "radius_scale"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and np.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be a positive real, got {val!r}")
        for name in ("negatives_per_positive", "batch_size"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or val < 1:
                raise ConfigError(f"{name} must be a positive integer, got {val!r}")
        if not isinstance(self.epochs, (int, np.integer)) or self.epochs < 0:
            raise ConfigError(f"epochs must be a non-negative integer, got {self.epochs!r}")
        if not (np.isfinite(self.init_center_scale) and self.init_center_scale >= 0):
            raise ConfigError(f"init_center_scale must be >= 0, got {self.init_center_scale!r}")
        if not np.isfinite(self.init_radius):
            raise ConfigError("init_radius must be finite")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError(f"seed must be an unsigned integer, got {self.seed!r}")

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown training options: {sorted(unknown)}")
        return cls(**d)


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    valid_f1: float
    tau: float


@dataclass
class TrainReport:
    records: list[EpochRecord] = field(default_factory=list)
    duration: float = 0.0
    flagged_negatives: int = 0

    def metrics_csv(self) -> str:
        lines = ["epoch,mean_loss,valid_f1,tau"]
        lines += [f"{r.epoch},{r.mean_loss!r},{r.valid_f1!r},{r.tau!r}" for r in self.records]
        return "\n".join(lines) + "\n"


class EmbeddingTable:
    """Dense node-indexed disks: ``centers[k]`` and ``radii[k]`` describe node ``k``."""

    def __init__(self, space: geometry.QuasiMetricSpace, centers, radii, node_names=None):
        centers = np.array(centers, dtype=np.float64, order="C", ndmin=2)
        radii = np.array(radii, dtype=np.float64).reshape(-1)
        if centers.shape != (len(radii), space.dim):
            raise InvalidArgumentError(
                f"centers shape {centers.shape} does not match {len(radii)} nodes x dim {space.dim}"
            )
        if node_names is None:
            node_names = [str(k) for k in range(len(radii))]
        if len(node_names) != len(radii):
            raise InvalidArgumentError("node_names length must equal node count")
        self.space = space
        self.centers = centers
        self.radii = radii
        self.node_names = tuple(node_names)

    @property
    def n_nodes(self) -> int:
        return len(self.radii)

    def disk(self, k: int) -> FormalDisk:
        return FormalDisk(self.centers[k].copy(), float(self.radii[k]))

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.space, self.centers.copy(), self.radii.copy(), self.node_names)

    def membership_residual(self) -> float:
        if not self.n_nodes:
            return 0.0
        return max(geometry.membership_residual(self.space, c) for c in self.centers)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (
            self.space == other.space
            and self.node_names == other.node_names
            and np.array_equal(self.centers, other.centers)
            and np.array_equal(self.radii, other.radii)
        )


def init_embeddings(space, n_nodes: int, config: TrainConfig, rng: np.random.Generator, node_names=None):
    if n_nodes < 1:
        raise InvalidArgumentError("need at least one node")
    s = config.init_center_scale
    kind = space.kind
    if kind == geometry.SPHERE:
        c = rng.normal(size=(n_nodes, space.dim))
        centers = c / np.linalg.norm(c, axis=1, keepdims=True)
    elif kind == geometry.LORENTZ:
        v = rng.normal(scale=s, size=(n_nodes, space.dim - 1)) if s > 0 else np.zeros((n_nodes, space.dim - 1))
        centers = np.empty((n_nodes, space.dim))
        for k in range(n_nodes):
            tangent = np.concatenate([[0.0], v[k]])
            centers[k] = geometry.project_to_manifold(
                space, geometry.exp_map(space, space.base_point, tangent)
            )
    else:
        centers = rng.uniform(-s, s, size=(n_nodes, space.dim))
        if kind == geometry.POLYHEDRAL and space.restrict_to_span:
            B = space._span_basis
            centers = centers @ B.T @ B
    half = abs(config.init_radius) / 2
    radii = config.init_radius + rng.uniform(-half, half, size=n_nodes)
    return EmbeddingTable(space, centers, radii, node_names)


def energy(table: EmbeddingTable, i: int, j: int) -> float:
    """Energy of pair (i, j) = protrusion of disk j over disk i."""
    n = table.n_nodes
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidArgumentError(f"node index out of range for {n} nodes: ({i}, {j})")
    return protrusion(table.space, table.disk(j), table.disk(i))


def pair_loss(E: float, is_positive: bool, margin: float) -> float:
    if is_positive:
        return max(0.0, E)
    return max(0.0, margin - E)


def loss_slope(E: float, is_positive: bool, margin: float) -> float:
    """dL/dE with subgradient 0 at the kinks."""
    if is_positive:
        return 1.0 if E > 0 else 0.0
    return -1.0 if E < margin else 0.0


def sample_negatives(positives, closure: PairSet, n_nodes: int, k: int, rng: np.random.Generator):
    """Corrupt each positive ``k`` times by replacing its head or its tail.

    Returns ``(pairs, flagged)``: pairs of shape ``(len(positives) * k, 2)``
    grouped by positive, and a mask of samples that are still a closure or self
    pair after the attempt budget ran out.
    """
    if n_nodes < 2:
        raise InvalidArgumentError("negative sampling needs at least 2 nodes")
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    base = np.repeat(positives, k, axis=0)
    replace_head = rng.random(len(base)) < 0.5
    out = base.copy()
    pending = np.arange(len(base))
    for _ in range(MAX_NEGATIVE_ATTEMPTS):
        if not len(pending):
            break
        repl = rng.integers(0, n_nodes, size=len(pending))
        head = replace_head[pending]
        out[pending, 0] = np.where(head, repl, base[pending, 0])
        out[pending, 1] = np.where(head, base[pending, 1], repl)
        cand = out[pending]
        bad = (cand[:, 0] == cand[:, 1]) | closure.contains_many(cand)
        pending = pending[bad]
    flagged = np.zeros(len(base), dtype=bool)
    flagged[pending] = True
    return out, flagged


def rsgd_step(table: EmbeddingTable, pair, is_positive: bool, config: TrainConfig) -> float:
    """One Riemannian SGD update for a single pair; returns the pre-update loss.

    Reference implementation on top of :mod:`geometry`; the trainer runs the
    same update through :func:`kernels.run_samples`.
    """
    i, j = int(pair[0]), int(pair[1])
    space = table.space
    E = energy(table, i, j)
    loss = pair_loss(E, is_positive, config.margin)
    g = loss_slope(E, is_positive, config.margin)
    if g == 0.0:
        return loss
    eta = config.learning_rate
    xi, xj = table.centers[i].copy(), table.centers[j].copy()
    try:
        grad_j = geometry.distance_grad(space, xj, xi, geometry.FIRST)
        grad_i = geometry.distance_grad(space, xj, xi, geometry.SECOND)
    except DegenerateGradientError:
        grad_i = grad_j = None
    if grad_i is not None:
        step = -eta * config.center_scale * g
        table.centers[j] = geometry.project_to_manifold(space, geometry.exp_map(space, xj, step * grad_j))
        table.centers[i] = geometry.project_to_manifold(space, geometry.exp_map(space, xi, step * grad_i))
    # dE/dr_j = -1, dE/dr_i = +1
    table.radii[j] = table.radii[j] + eta * config.radius_scale * g
    table.radii[i] = table.radii[i] - eta * config.radius_scale * g
    return loss


def epoch_samples(positives, closure, n_nodes, config, rng):
    """Shuffle positives and interleave each with its fresh negatives.

    Flagged negatives (no true negative found) are dropped.
    """
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    k = config.negatives_per_positive
    pos = positives[rng.permutation(len(positives))]
    negs, flagged = sample_negatives(pos, closure, n_nodes, k, rng)
    P = len(pos)
    pairs = np.empty((P, k + 1, 2), dtype=np.int64)
    pairs[:, 0] = pos
    pairs[:, 1:] = negs.reshape(P, k, 2)
    labels = np.zeros((P, k + 1), dtype=np.uint8)
    labels[:, 0] = 1
    keep = np.ones((P, k + 1), dtype=bool)
    keep[:, 1:] = ~flagged.reshape(P, k)
    return pairs[keep], labels[keep], int(flagged.sum())


def train(dataset, space, config: TrainConfig, backend=None, callback=None):
    """Train disk embeddings for ``dataset`` (a :class:`~diskembed.dag.DagDataset`).

    Returns ``(table, report)``. Deterministic for a fixed ``config.seed``.
    """
    config.validate()
    positives = np.asarray(dataset.train_pos, dtype=np.int64).reshape(-1, 2)
    if len(positives) == 0:
        raise InvalidArgumentError("training set has no positive pairs")
    n = dataset.n_nodes
    rng = np.random.default_rng(config.seed)
    table = init_embeddings(space, n, config, rng, dataset.node_names)
    report = TrainReport()
    has_valid = len(dataset.valid_pos) > 0 and len(dataset.valid_neg) > 0
    start = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        pairs, labels, flagged = epoch_samples(positives, dataset.closure, n, config, rng)
        report.flagged_negatives += flagged
        losses = []
        for lo in range(0, len(pairs), config.batch_size):
            chunk = slice(lo, lo + config.batch_size)
            losses.append(
                kernels.run_samples(
                    space, table.centers, table.radii, pairs[chunk, 0], pairs[chunk, 1], labels[chunk],
                    config.margin, config.learning_rate, config.center_scale, config.radius_scale,
                    backend=backend,
                )
            )
        mean_loss = float(np.concatenate(losses).mean())
        if has_valid:
            tau = tune_on(table, dataset.valid_pos, dataset.valid_neg)
            f1 = evaluate_split(table, dataset.valid_pos, dataset.valid_neg, tau, "valid").f1
        else:
            tau, f1 = float("nan"), float("nan")
        report.records.append(EpochRecord(epoch, mean_loss, f1, tau))
        if callback is not None:
            callback(epoch, table, report.records[-1])
        log.debug("epoch %d loss %.6f valid_f1 %.4f", epoch, mean_loss, f1)
    report.duration = time.perf_counter() - start
    return table, report


# --- checkpoint ------------------------------------------------------------

def checkpoint_text(table: EmbeddingTable) -> str:
    space = table.space
    header = {
        "format_version": CHECKPOINT_VERSION,
        "geometry": space.kind,
        "dim": space.dim,
        "node_count": table.n_nodes,
    }
    if space.kind == geometry.POLYHEDRAL:
        header["generators"] = [list(w) for w in space.generators]
        header["restrict_to_span"] = space.restrict_to_span
    lines = [json.dumps(header)]
    for name, r, c in zip(table.node_names, table.radii.tolist(), table.centers.tolist()):
        lines.append(json.dumps({"name": name, "radius": r, "center": c}))
    return "\n".join(lines) + "\n"


def save_checkpoint(table: EmbeddingTable, path) -> None:
    atomic_write_text(path, checkpoint_text(table))


def load_checkpoint(path) -> EmbeddingTable:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty checkpoint (missing format_version header)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise FormatError("checkpoint header is not valid JSON (expected format_version header)") from None
    if not isinstance(header, dict) or header.get("format_version") != CHECKPOINT_VERSION:
        found = header.get("format_version") if isinstance(header, dict) else None
        raise FormatError(f"unsupported checkpoint format_version {found!r}, expected {CHECKPOINT_VERSION}")
    try:
        kind, dim, count = header["geometry"], int(header["dim"]), int(header["node_count"])
        if kind == geometry.POLYHEDRAL:
            space = geometry.QuasiMetricSpace.polyhedral(
                header["generators"], bool(header.get("restrict_to_span", False))
            )
        else:
            space = geometry.QuasiMetricSpace(kind, dim)
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"bad checkpoint header: {exc}") from None
    body = lines[1:]
    if len(body) != count:
        raise FormatError(f"header declares {count} nodes but {len(body)} records follow")
    names, radii, centers = [], [], []
    for k, line in enumerate(body, start=2):
        try:
            rec = json.loads(line)
            names.append(rec["name"])
            radii.append(float(rec["radius"]))
            centers.append([float(v) for v in rec["center"]])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"checkpoint line {k}: {exc}") from None
        if len(centers[-1]) != space.dim:
            raise FormatError(f"checkpoint line {k}: center has {len(centers[-1])} coordinates, expected {space.dim}")
    table = EmbeddingTable(space, np.array(centers).reshape(count, space.dim), radii, names)
    return table
