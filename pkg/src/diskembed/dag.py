"""DAG ingestion, transitive closure/reduction and train/valid/test splits.

Edges are ordered id pairs ``(u, v)`` meaning ``u`` is-a ``v`` (child, parent).
Pair collections are stored as :class:`PairSet`, a sorted array of
``u * n + v`` codes, which keeps closures of large graphs compact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, CycleError, FormatError, ParseError, ValidationError
from .fileio import atomic_directory

MANIFEST_VERSION = 1
# enumerate the complement directly below this many ordered pairs
_DENSE_NEGATIVE_LIMIT = 1 << 22


class PairSet:
    """Immutable set of ordered pairs over ``n`` nodes."""

    __slots__ = ("n", "codes")

    def __init__(self, n: int, codes=None):
        self.n = int(n)
        if codes is None:
            codes = np.empty(0, dtype=np.int64)
        codes = np.unique(np.asarray(codes, dtype=np.int64))
        codes.setflags(write=False)
        self.codes = codes

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "PairSet":
        arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
        if arr.size == 0:
            return cls(n)
        arr = arr.reshape(-1, 2)
        return cls(n, arr[:, 0] * n + arr[:, 1])

    def __len__(self):
        return int(self.codes.shape[0])

    def __iter__(self):
        n = self.n
        for c in self.codes.tolist():
            yield divmod(c, n)

    def __contains__(self, pair) -> bool:
        u, v = pair
        c = int(u) * self.n + int(v)
        k = int(np.searchsorted(self.codes, c))
        return k < len(self.codes) and int(self.codes[k]) == c

    def __eq__(self, other):
        if isinstance(other, PairSet):
            return self.n == other.n and np.array_equal(self.codes, other.codes)
        if isinstance(other, (set, frozenset)):
            return set(self) == other
        return NotImplemented

    def __hash__(self):
        return hash((self.n, self.codes.tobytes()))

    def __repr__(self):
        return f"PairSet(n={self.n}, size={len(self)})"

    def contains_codes(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        if len(self.codes) == 0:
            return np.zeros(codes.shape, dtype=bool)
        k = np.searchsorted(self.codes, codes)
        k = np.minimum(k, len(self.codes) - 1)
        return self.codes[k] == codes

    def contains_many(self, pairs) -> np.ndarray:
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        return self.contains_codes(pairs[:, 0] * self.n + pairs[:, 1])

    def to_array(self) -> np.ndarray:
        out = np.empty((len(self.codes), 2), dtype=np.int64)
        out[:, 0], out[:, 1] = np.divmod(self.codes, self.n)
        return out

    def union(self, other: "PairSet") -> "PairSet":
        return PairSet(self.n, np.union1d(self.codes, other.codes))

    def difference(self, other: "PairSet") -> "PairSet":
        return PairSet(self.n, np.setdiff1d(self.codes, other.codes, assume_unique=True))

    def issubset(self, other: "PairSet") -> bool:
        return bool(np.all(other.contains_codes(self.codes)))

    def isdisjoint(self, other: "PairSet") -> bool:
        return not bool(np.any(other.contains_codes(self.codes)))

    def reversed(self) -> "PairSet":
        u, v = np.divmod(self.codes, self.n)
        return PairSet(self.n, v * self.n + u)


class Dag:
    """Validated directed acyclic graph over densely numbered nodes."""

    def __init__(self, node_names, edges):
        self.node_names = tuple(node_names)
        n = len(self.node_names)
        if len(set(self.node_names)) != n:
            raise ValidationError("node names must be unique")
        if not isinstance(edges, PairSet):
            edges = PairSet.from_pairs(n, edges)
        arr = edges.to_array()
        if edges.n != n:
            raise ValidationError(f"edge set is over {edges.n} nodes, graph has {n}")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValidationError("edge endpoint id out of range")
        loops = arr[arr[:, 0] == arr[:, 1]]
        if len(loops):
            raise ValidationError(f"self-loop on node {self.node_names[loops[0, 0]]!r}")
        self.edges = edges
        self.children: list[list[int]] = [[] for _ in range(n)]
        for u, v in arr.tolist():
            self.children[u].append(v)
        self.topological_order = _topological_order(self.children, self.node_names)
        self._reach = None

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.node_names)}

    def reach_bitsets(self) -> list[int]:
        """Per-node bitset (Python int) of nodes reachable by a non-empty path."""
        if self._reach is None:
            reach = [0] * self.n_nodes
            for u in reversed(self.topological_order):
                acc = 0
                for v in self.children[u]:
                    acc |= reach[v] | (1 << v)
                reach[u] = acc
            self._reach = reach
        return self._reach

    def __eq__(self, other):
        if not isinstance(other, Dag):
            return NotImplemented
        return self.node_names == other.node_names and self.edges == other.edges

    def __repr__(self):
        return f"Dag(nodes={self.n_nodes}, edges={len(self.edges)})"


def _topological_order(children, names) -> list[int]:
    """Iterative DFS; raises CycleError naming the first back edge found."""
    n = len(children)
    state = bytearray(n)  # 0 new, 1 on stack, 2 done
    post = []
    for root in range(n):
        if state[root]:
            continue
        state[root] = 1
        stack = [(root, 0)]
        while stack:
            u, k = stack[-1]
            kids = children[u]
            if k < len(kids):
                stack[-1] = (u, k + 1)
                v = kids[k]
                if state[v] == 1:
                    raise CycleError((names[u], names[v]))
                if state[v] == 0:
                    state[v] = 1
                    stack.append((v, 0))
            else:
                state[u] = 2
                post.append(u)
                stack.pop()
    post.reverse()
    return post


def parse_edge_list(text: str) -> Dag:
    """Parse ``child<TAB>parent`` lines; blank lines and ``#`` comments are skipped."""
    index: dict[str, int] = {}
    names: list[str] = []
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0].strip() or not fields[1].strip():
            raise ParseError(f"expected 2 tab-separated fields, got {len(fields)}", lineno)
        child, parent = fields[0].strip(), fields[1].strip()
        if child == parent:
            raise ValidationError(f"line {lineno}: self-loop on {child!r}")
        ids = []
        for name in (child, parent):
            if name not in index:
                index[name] = len(names)
                names.append(name)
            ids.append(index[name])
        pairs.append((ids[0], ids[1]))
    return Dag(names, PairSet.from_pairs(len(names), pairs))


def format_edge_list(dag: Dag, pairs=None) -> str:
    """Render pairs (default: the graph's edges) as TSV lines in code order."""
    pairs = dag.edges if pairs is None else pairs
    if not isinstance(pairs, PairSet):
        pairs = PairSet.from_pairs(dag.n_nodes, pairs)
    names = dag.node_names
    return "".join(f"{names[u]}\t{names[v]}\n" for u, v in pairs)


def transitive_closure(dag: Dag) -> PairSet:
    n = dag.n_nodes
    if n == 0:
        return PairSet(0)
    nbytes = (n + 7) // 8
    chunks = []
    for u, bits in enumerate(dag.reach_bitsets()):
        if not bits:
            continue
        raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
        targets = np.flatnonzero(np.unpackbits(raw, bitorder="little")[:n])
        chunks.append(u * n + targets.astype(np.int64))
    if not chunks:
        return PairSet(n)
    return PairSet(n, np.concatenate(chunks))


def transitive_reduction(dag: Dag) -> PairSet:
    """Keep edge (u, v) iff v is not reachable from another child of u."""
    reach = dag.reach_bitsets()
    kept = []
    for u, kids in enumerate(dag.children):
        below = 0
        for v in kids:
            below |= reach[v]
        kept.extend((u, v) for v in kids if not (below >> v) & 1)
    return PairSet.from_pairs(dag.n_nodes, kept)


def reverse(dag: Dag) -> Dag:
    return Dag(dag.node_names, dag.edges.reversed())


@dataclass(frozen=True)
class SplitParams:
    percent_nonbasic: float
    valid_count: int
    test_count: int
    neg_ratio: int
    seed: int

    def as_dict(self) -> dict:
        return {
            "percent_nonbasic": self.percent_nonbasic,
            "valid_count": self.valid_count,
            "test_count": self.test_count,
            "neg_ratio": self.neg_ratio,
            "seed": self.seed,
        }


@dataclass
class DagDataset:
    dag: Dag
    closure: PairSet
    reduction: PairSet
    train_pos: np.ndarray
    valid_pos: np.ndarray
    test_pos: np.ndarray
    valid_neg: np.ndarray
    test_neg: np.ndarray
    split_params: SplitParams
    extra: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.dag.n_nodes

    @property
    def node_names(self) -> tuple[str, ...]:
        return self.dag.node_names

    def counts(self) -> dict:
        return {
            "nodes": self.dag.n_nodes,
            "edges": len(self.dag.edges),
            "closure": len(self.closure),
            "reduction": len(self.reduction),
            "train_pos": len(self.train_pos),
            "valid_pos": len(self.valid_pos),
            "valid_neg": len(self.valid_neg),
            "test_pos": len(self.test_pos),
            "test_neg": len(self.test_neg),
        }


def _codes_to_pairs(codes, n) -> np.ndarray:
    codes = np.sort(np.asarray(codes, dtype=np.int64))
    out = np.empty((len(codes), 2), dtype=np.int64)
    out[:, 0], out[:, 1] = np.divmod(codes, n)
    return out


def _sample_non_closure(closure: PairSet, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct uniform codes of ordered pairs outside the closure, self-pairs excluded."""
    available = n * (n - 1) - len(closure)
    if count > available:
        raise ConfigError(f"need {count} negative pairs but only {available} non-closure pairs exist")
    if count == 0:
        return np.empty(0, dtype=np.int64)
    if n * n <= _DENSE_NEGATIVE_LIMIT:
        allc = np.arange(n * n, dtype=np.int64)
        allc = allc[allc // n != allc % n]
        pool = np.setdiff1d(allc, closure.codes, assume_unique=True)
        return rng.choice(pool, size=count, replace=False)
    chosen = np.empty(0, dtype=np.int64)
    while len(chosen) < count:
        draw = rng.integers(0, n * n, size=2 * (count - len(chosen)) + 16, dtype=np.int64)
        draw = draw[(draw // n != draw % n) & ~closure.contains_codes(draw)]
        merged = np.concatenate([chosen, draw])
        _, first = np.unique(merged, return_index=True)
        chosen = merged[np.sort(first)]
    return chosen[:count]


def split_dataset(
    dag: Dag,
    percent_nonbasic: float,
    valid_count: int,
    test_count: int,
    neg_ratio: int = 10,
    seed: int = 0,
) -> DagDataset:
    """Build a train/valid/test split following the basic/non-basic protocol.

    Training always contains the transitive reduction plus
    ``floor(percent_nonbasic * |closure \\ reduction|)`` sampled non-basic
    pairs. Validation and test positives come from the remaining non-basic
    pairs; negatives are distinct non-closure pairs fixed at split time.
    """
    if not 0.0 <= percent_nonbasic <= 1.0:
        raise ConfigError(f"percent_nonbasic must be in [0, 1], got {percent_nonbasic}")
    for name, val in (("valid_count", valid_count), ("test_count", test_count), ("neg_ratio", neg_ratio)):
        if int(val) != val or val < 0:
            raise ConfigError(f"{name} must be a non-negative integer, got {val}")
    params = SplitParams(float(percent_nonbasic), int(valid_count), int(test_count), int(neg_ratio), int(seed))
    rng = np.random.default_rng(params.seed)
    n = dag.n_nodes
    closure = transitive_closure(dag)
    reduction = transitive_reduction(dag)
    nonbasic = closure.difference(reduction).codes
    m = len(nonbasic)
    # tolerance guards against 0.29 * 100 == 28.999...
    k_train = min(m, math.floor(params.percent_nonbasic * m + 1e-9))
    remaining = m - k_train
    if params.valid_count + params.test_count > remaining:
        raise ConfigError(
            f"insufficient non-basic pairs: {remaining} available after training share, "
            f"{params.valid_count + params.test_count} requested"
        )
    perm = rng.permutation(m)
    train_extra = nonbasic[perm[:k_train]]
    valid = nonbasic[perm[k_train:k_train + params.valid_count]]
    test = nonbasic[perm[k_train + params.valid_count:k_train + params.valid_count + params.test_count]]
    n_vneg = params.neg_ratio * params.valid_count
    n_tneg = params.neg_ratio * params.test_count
    negs = _sample_non_closure(closure, n, n_vneg + n_tneg, rng)
    return DagDataset(
        dag=dag,
        closure=closure,
        reduction=reduction,
        train_pos=_codes_to_pairs(np.concatenate([reduction.codes, train_extra]), n),
        valid_pos=_codes_to_pairs(valid, n),
        test_pos=_codes_to_pairs(test, n),
        valid_neg=_codes_to_pairs(negs[:n_vneg], n),
        test_neg=_codes_to_pairs(negs[n_vneg:], n),
        split_params=params,
    )


# --- split manifest --------------------------------------------------------

_PAIR_FILES = ("train", "valid_pos", "valid_neg", "test_pos", "test_neg")


def _pairs_tsv(names, pairs) -> str:
    return "".join(f"{names[u]}\t{names[v]}\n" for u, v in np.asarray(pairs).tolist())


def write_split_manifest(dataset: DagDataset, out_dir, extra_files: dict[str, str] | None = None) -> None:
    """Write the manifest directory atomically (built aside, then renamed).

    ``extra_files`` maps additional file names to text written alongside.
    """
    names = dataset.node_names
    files = {
        "train.tsv": dataset.train_pos,
        "valid_pos.tsv": dataset.valid_pos,
        "valid_neg.tsv": dataset.valid_neg,
        "test_pos.tsv": dataset.test_pos,
        "test_neg.tsv": dataset.test_neg,
        "closure.tsv": dataset.closure.to_array(),
    }
    meta = {
        "format_version": MANIFEST_VERSION,
        "split_params": dataset.split_params.as_dict(),
        "counts": dataset.counts(),
    }
    with atomic_directory(out_dir) as tmp:
        for fname, pairs in files.items():
            (tmp / fname).write_text(_pairs_tsv(names, pairs), encoding="utf-8")
        (tmp / "nodes.tsv").write_text("".join(f"{name}\n" for name in names), encoding="utf-8")
        (tmp / "split.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        for fname, text in (extra_files or {}).items():
            (tmp / fname).write_text(text, encoding="utf-8")


def _read_pairs(path: Path, index: dict[str, int]) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(f"{path.name}: expected 2 tab-separated fields", lineno)
        try:
            rows.append((index[fields[0]], index[fields[1]]))
        except KeyError as exc:
            raise FormatError(f"{path.name}:{lineno}: unknown node {exc.args[0]!r}") from None
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def read_split_manifest(split_dir) -> DagDataset:
    split_dir = Path(split_dir)
    meta_path = split_dir / "split.json"
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FormatError(f"{split_dir} is not a split manifest (missing split.json)") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"split.json is not valid JSON: {exc}") from None
    if meta.get("format_version") != MANIFEST_VERSION:
        raise FormatError(f"unsupported split manifest format_version {meta.get('format_version')!r}")
    names = (split_dir / "nodes.tsv").read_text(encoding="utf-8").splitlines()
    index = {name: i for i, name in enumerate(names)}
    n = len(names)
    closure_pairs = _read_pairs(split_dir / "closure.tsv", index)
    # the closure is itself a DAG with the same closure and reduction
    dag = Dag(names, PairSet.from_pairs(n, closure_pairs))
    loaded = {key: _read_pairs(split_dir / f"{key}.tsv", index) for key in _PAIR_FILES}
    p = meta["split_params"]
    return DagDataset(
        dag=dag,
        closure=dag.edges,
        reduction=transitive_reduction(dag),
        train_pos=loaded["train"],
        valid_pos=loaded["valid_pos"],
        test_pos=loaded["test_pos"],
        valid_neg=loaded["valid_neg"],
        test_neg=loaded["test_neg"],
        split_params=SplitParams(
            float(p["percent_nonbasic"]), int(p["valid_count"]), int(p["test_count"]),
            int(p["neg_ratio"]), int(p["seed"]),
        ),
    )
