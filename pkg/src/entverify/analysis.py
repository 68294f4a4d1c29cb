"""Entanglement analysis: negativity, local-filter protocols, bootstrap
confidence intervals, fidelity bounds, and ring-partition inference.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AnnihilationError, DegenerateDataError
from .graphs import GraphStateSpec, reduced_density_matrix
from .pauli import DensityMatrix, LocalFilter, filter_matrix
from .tolerances import TOL
from .tomography import TomographyDataset, reconstruct

PROTOCOLS = ("nn-filter", "dist2", "dist3", "pt-test")


def thread_limit() -> int:
    """Worker cap for analysis pools; ENTVERIFY_THREADS overrides."""
    env = os.environ.get("ENTVERIFY_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"ENTVERIFY_THREADS={env!r} is not an integer") from None
        if n < 1:
            raise ValueError("ENTVERIFY_THREADS must be >= 1")
        return n
    return min(8, os.cpu_count() or 1)


def parallel_map(fn, items):
    """Order-preserving map over a bounded thread pool."""
    items = list(items)
    if len(items) <= 1 or thread_limit() == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=thread_limit()) as pool:
        return list(pool.map(fn, items))


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def _n_qubits(mat: np.ndarray) -> int:
    dim = mat.shape[0]
    n = dim.bit_length() - 1
    if mat.shape != (dim, dim) or 2**n != dim:
        raise ValueError("matrix must be square with power-of-two dimension")
    return n


def partial_transpose(rho, subset) -> np.ndarray:
    """Transpose the tensor factors at the given qubit positions."""
    mat = _as_matrix(rho)
    n = _n_qubits(mat)
    subset = tuple(int(q) for q in subset)
    if len(set(subset)) != len(subset) or any(not 0 <= q < n for q in subset):
        raise ValueError(f"bad subset {subset} for {n} qubits")
    t = mat.reshape((2,) * (2 * n))
    perm = list(range(2 * n))
    for q in subset:
        perm[q], perm[n + q] = n + q, q
    return t.transpose(perm).reshape(mat.shape)


def negativity(rho, subset) -> float:
    """Sum of |negative eigenvalues| of the partial transpose; 0 means the
    PPT criterion cannot certify entanglement across this cut."""
    w = np.linalg.eigvalsh(partial_transpose(rho, subset))
    neg = w[w < -TOL.eigenvalue_dust]
    return float(-neg.sum()) if neg.size else 0.0


def _partial_trace(mat: np.ndarray, n: int, drop) -> np.ndarray:
    t = mat.reshape((2,) * (2 * n))
    for q in sorted(drop, reverse=True):
        t = np.trace(t, axis1=q, axis2=t.ndim // 2 + q)
    return t.reshape(2 ** (n - len(drop)), -1)


def apply_filters(rho, filters, trace_out) -> DensityMatrix:
    """Project through the local filters, renormalize, drop the listed
    positions. Remaining qubits keep their relative order."""
    mat = _as_matrix(rho)
    n = _n_qubits(mat)
    filters = tuple(filters)
    supports = [f.qubit for f in filters]
    if len(set(supports)) != len(supports):
        raise ValueError("filters must act on distinct qubits")
    trace_out = tuple(int(q) for q in trace_out)
    if any(not 0 <= q < n for q in list(supports) + list(trace_out)):
        raise ValueError("filter or trace-out position out of range")
    if len(set(trace_out)) != len(trace_out):
        raise ValueError("duplicate trace-out positions")
    op = np.array([[1.0]])
    singles = {f.qubit: filter_matrix(f) for f in filters}
    for q in range(n):
        op = np.kron(op, singles.get(q, np.eye(2)))
    filtered = op @ mat @ op.conj().T
    weight = float(np.trace(filtered).real)
    if weight < TOL.annihilation:
        raise AnnihilationError("filters are orthogonal to the state")
    reduced = _partial_trace(filtered / weight, n, trace_out)
    return DensityMatrix((reduced + reduced.conj().T) / 2)


def nn_filter_negativity(rho4) -> float:
    """Chain (A,B,C,D): Z-plus filters on A and D localize entanglement onto
    the middle pair; returns the negativity of the (B,C) state."""
    pair = apply_filters(
        rho4, (LocalFilter(0, "Z+"), LocalFilter(3, "Z+")), trace_out=(0, 3)
    )
    return negativity(pair, (1,))


def dist2_negativity(ds: TomographyDataset) -> float:
    """Chain (E,A,B,C,D,F), dataset already postselected on the E/F readout:
    X-plus on B and Z-plus on D localize entanglement onto {A,C}."""
    rho = reconstruct(ds).rho
    pair = apply_filters(
        rho, (LocalFilter(1, "X+"), LocalFilter(3, "Z+")), trace_out=(1, 3)
    )
    return negativity(pair, (1,))


def dist3_negativity(ds: TomographyDataset) -> float:
    """Chain (E,A,B,C,D,F) postselected on E/F: X-plus filters on both middle
    qubits localize entanglement onto the ends {A,D}."""
    rho = reconstruct(ds).rho
    pair = apply_filters(
        rho, (LocalFilter(1, "X+"), LocalFilter(2, "X+")), trace_out=(1, 2)
    )
    return negativity(pair, (1,))


@dataclass(frozen=True)
class NegativityEstimate:
    value: float
    stddev: float
    ci_low: float
    ci_high: float
    pair: tuple[int, ...]
    protocol: str

    def __post_init__(self):
        object.__setattr__(self, "pair", tuple(int(q) for q in self.pair))
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.value < 0:
            raise ValueError("negativity cannot be negative")
        if not self.ci_low <= self.value <= self.ci_high:
            raise ValueError("confidence interval must contain the value")

    @property
    def significant(self) -> bool:
        return self.ci_low > 0.0

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "stddev": self.stddev,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "pair": list(self.pair),
            "protocol": self.protocol,
        }

    @classmethod
    def from_json(cls, data: dict) -> "NegativityEstimate":
        return cls(
            float(data["value"]),
            float(data["stddev"]),
            float(data["ci_low"]),
            float(data["ci_high"]),
            tuple(data["pair"]),
            data["protocol"],
        )


def pt_test(rho4, subset, pair=()) -> NegativityEstimate:
    """Negativity of a 4-qubit state across the given bipartition, wrapped as
    a point estimate (bootstrap over a dataset for real error bars)."""
    value = negativity(rho4, subset)
    return NegativityEstimate(
        value=value,
        stddev=0.0,
        ci_low=value,
        ci_high=value,
        pair=tuple(pair),
        protocol="pt-test",
    )


def bootstrap(
    ds: TomographyDataset,
    statistic,
    resamples: int = 1000,
    level: float = 0.95,
    seed=None,
    pair=(),
    protocol: str = "pt-test",
) -> NegativityEstimate:
    """Percentile bootstrap of a dataset statistic under multinomial
    resampling of each setting's counts. Deterministic for a fixed seed."""
    if resamples < 1:
        raise ValueError("resamples must be positive")
    if not 0.0 < level < 1.0:
        raise ValueError("level must sit strictly between 0 and 1")
    value = float(statistic(ds))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(resamples)

    def one(child):
        rng = np.random.default_rng(child)
        try:
            return float(statistic(ds.resample(rng)))
        except (DegenerateDataError, AnnihilationError):
            return None

    vals = np.array([v for v in parallel_map(one, children) if v is not None])
    if vals.size == 0:
        raise DegenerateDataError("every bootstrap resample failed")
    alpha = (1.0 - level) / 2.0
    q_lo, q_hi = np.percentile(vals, [100 * alpha, 100 * (1 - alpha)])
    # Basic (reflected) interval: unlike raw percentiles it stays honest for
    # skewed or boundary-hugging resample distributions, letting ci_low fall
    # below zero when the data cannot rule the negativity out.
    lo, hi = 2 * value - float(q_hi), 2 * value - float(q_lo)
    return NegativityEstimate(
        value=value,
        stddev=float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
        ci_low=min(lo, value),
        ci_high=max(hi, value),
        pair=tuple(pair),
        protocol=protocol,
    )


@dataclass(frozen=True)
class SeparationHypothesis:
    """A candidate bipartition of the ring into two blocks."""

    block_a: tuple[int, ...]
    block_b: tuple[int, ...]

    def __post_init__(self):
        a = tuple(sorted(int(q) for q in self.block_a))
        b = tuple(sorted(int(q) for q in self.block_b))
        if not a or not b:
            raise ValueError("both blocks must be nonempty")
        if set(a) & set(b):
            raise ValueError("blocks must be disjoint")
        object.__setattr__(self, "block_a", a)
        object.__setattr__(self, "block_b", b)

    def side_of(self, qubit: int) -> str:
        if qubit in self.block_a:
            return "a"
        if qubit in self.block_b:
            return "b"
        raise ValueError(f"qubit {qubit} not in either block")

    def to_json(self) -> dict:
        return {"block_a": list(self.block_a), "block_b": list(self.block_b)}


@dataclass(frozen=True)
class SuggestedPtTest:
    """A 4-qubit chain and cut whose pt_test would refute one hypothesis."""

    chain: tuple[int, ...]
    subset: tuple[int, ...]  # chain positions forming one side of the cut

    def to_json(self) -> dict:
        return {"chain": list(self.chain), "subset": list(self.subset)}


@dataclass(frozen=True)
class EntanglementVerdict:
    status: str  # "FullyEntangled" or "Inconclusive"
    hypotheses: tuple[SeparationHypothesis, ...]
    suggestions: tuple[SuggestedPtTest, ...] = ()
    aux_consumed: int = 0

    def __post_init__(self):
        if self.status not in ("FullyEntangled", "Inconclusive"):
            raise ValueError(f"unknown status {self.status!r}")
        if (self.status == "FullyEntangled") != (len(self.hypotheses) == 0):
            raise ValueError("FullyEntangled exactly when no hypothesis survives")

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "hypotheses": [h.to_json() for h in self.hypotheses],
            "suggestions": [s.to_json() for s in self.suggestions],
            "aux_consumed": self.aux_consumed,
        }


def _ring_from_pairs(pairs):
    """Validate that the pairs form one cycle; return it in traversal order."""
    adj: dict[int, list[int]] = {}
    for a, b in pairs:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    bad = [q for q, nb in adj.items() if len(nb) != 2]
    if bad:
        raise ValueError(f"pairs do not form a ring (degree != 2 at {sorted(bad)})")
    start = min(adj)
    order = [start, min(adj[start])]
    while True:
        prev, cur = order[-2], order[-1]
        nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
        if nxt == start:
            break
        order.append(nxt)
    if len(order) != len(adj):
        raise ValueError("pairs form more than one cycle")
    return order


def infer_full_entanglement(
    n: int, pair_results, aux=()
) -> EntanglementVerdict:
    """Deduce whether any bipartition of the ring is consistent with the
    observed pairwise negativities.

    A significant adjacent pair pins its two qubits to the same block, so
    candidate separations can only cut the ring at the insignificant edges;
    the contiguous arcs between those edges are assigned to blocks in every
    nontrivial way. Significant aux tests then discard the hypotheses whose
    cut they straddle. No surviving hypothesis means full entanglement.
    """
    results = [(tuple(int(q) for q in pair), est) for pair, est in pair_results]
    if len(results) != n:
        raise ValueError(f"expected one estimate per ring edge ({n}), got {len(results)}")
    order = _ring_from_pairs([pair for pair, _ in results])
    if len(order) != n:
        raise ValueError("pair labels do not match the ring size")
    edge_sig = {}
    for pair, est in results:
        key = frozenset(pair)
        if key in edge_sig:
            raise ValueError(f"duplicate estimate for pair {sorted(pair)}")
        edge_sig[key] = est.significant

    ring_edges = [
        (order[i], order[(i + 1) % n]) for i in range(n)
    ]
    missing = [e for e in ring_edges if frozenset(e) not in edge_sig]
    if missing:
        raise ValueError(f"missing estimates for edges {missing}")
    zero_edges = [e for e in ring_edges if not edge_sig[frozenset(e)]]

    if len(zero_edges) <= 1:
        return EntanglementVerdict("FullyEntangled", (), (), aux_consumed=len(aux))

    # Split the ring into contiguous arcs at the insignificant edges.
    pos = {q: i for i, q in enumerate(order)}
    cut_positions = set()
    for u, v in zero_edges:
        i, j = pos[u], pos[v]
        cut_positions.add(i if (i + 1) % n == j else j)
    starts = sorted((p + 1) % n for p in cut_positions)
    arcs = []
    for a, start in enumerate(starts):
        end = starts[(a + 1) % len(starts)]
        arc = []
        p = start
        while True:
            arc.append(order[p])
            p = (p + 1) % n
            if p == end:
                break
        arcs.append(tuple(arc))

    k = len(arcs)
    hypotheses = []
    for bits in range(1, 2 ** (k - 1)):
        block_a, block_b = [], []
        for i, arc in enumerate(arcs):
            side = 0 if i == 0 else (bits >> (i - 1)) & 1
            (block_a if side == 0 else block_b).extend(arc)
        hypotheses.append(SeparationHypothesis(tuple(block_a), tuple(block_b)))

    significant_aux = [est for est in aux if est.significant and len(est.pair) == 4]
    survivors = []
    for hyp in hypotheses:
        refuted = False
        for est in significant_aux:
            s1, s2 = est.pair[:2], est.pair[2:]
            try:
                sides1 = {hyp.side_of(q) for q in s1}
                sides2 = {hyp.side_of(q) for q in s2}
            except ValueError:
                continue
            if len(sides1) == 1 and len(sides2) == 1 and sides1 != sides2:
                refuted = True
                break
        if not refuted:
            survivors.append(hyp)

    if not survivors:
        return EntanglementVerdict("FullyEntangled", (), (), aux_consumed=len(aux))

    suggestions = []
    for hyp in survivors:
        pick = None
        for u, v in zero_edges:
            if hyp.side_of(u) != hyp.side_of(v):
                pick = (u, v)
                break
        if pick is None:
            suggestions.append(SuggestedPtTest((), ()))
            continue
        u, v = pick
        if (pos[u] + 1) % n != pos[v]:
            u, v = v, u
        chain = (
            order[(pos[u] - 1) % n],
            u,
            v,
            order[(pos[v] + 1) % n],
        )
        side_u = hyp.side_of(u)
        subset = tuple(i for i, q in enumerate(chain) if hyp.side_of(q) == side_u)
        suggestions.append(SuggestedPtTest(chain, subset))

    return EntanglementVerdict(
        "Inconclusive", tuple(survivors), tuple(suggestions), aux_consumed=len(aux)
    )


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Standard mixed-state fidelity, squared-trace convention: equals 1 only
    for identical states, |<a|b>|^2 for pure inputs."""
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError("states must share a dimension")
    root = _psd_sqrt(a)
    inner = _psd_sqrt(root @ b @ root)
    return float(np.real(np.trace(inner)) ** 2)


def trace_distance(rho, sigma) -> float:
    diff = _as_matrix(rho) - _as_matrix(sigma)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def fidelity_upper_bound(reconstructions, spec: GraphStateSpec) -> float:
    """Minimum over chains of the fidelity to the ideal chain state; the
    global fidelity can never exceed any subsystem's."""
    recs = list(reconstructions)
    n = spec.graph.n
    if len(recs) != n:
        raise ValueError(f"need all {n} chain reconstructions, got {len(recs)}")
    best = None
    for rec in recs:
        vertices = tuple(spec.vertex_of(q) for q in rec.subsystem)
        ideal = reduced_density_matrix(spec.graph, vertices)
        f = fidelity(rec.rho, ideal)
        best = f if best is None else min(best, f)
    return float(best)
