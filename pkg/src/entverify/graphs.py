"""Graphs, graph-state specifications, and exact reduced states.

A graph state is prepared by applying CZ along every edge to |+...+>. Its
stabilizer group is generated by K_a = X_a * prod_{b ~ a} Z_b with phase +1.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError
from .pauli import DensityMatrix, PauliString, pauli_multiply, pauli_to_matrix

STATEVECTOR_QUBIT_CAP = 16
RDM_SUBSET_CAP = 5


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..n-1; edges stored as sorted pairs."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vertex count must be positive, got {self.n}")
        seen = set()
        for e in self.edges:
            if len(e) != 2:
                raise ValueError(f"edge {e} is not a pair")
            a, b = e
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge {e} out of range for n={self.n}")
            if a > b:
                raise ValueError(f"edge {e} is not sorted")
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        normalized = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            normalized.add((min(a, b), max(a, b)))
        return cls(n, frozenset(normalized))

    def neighbors(self, v: int) -> tuple[int, ...]:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} out of range")
        out = set()
        for a, b in self.edges:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return tuple(sorted(out))

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def is_ring(self) -> bool:
        """True iff the graph is a single cycle visiting every vertex."""
        if self.n < 3 or len(self.edges) != self.n:
            return False
        if any(self.degree(v) != 2 for v in range(self.n)):
            return False
        seen = {0}
        prev, cur = None, 0
        for _ in range(self.n):
            nxt = [u for u in self.neighbors(cur) if u != prev]
            prev, cur = cur, nxt[0]
            seen.add(cur)
        return cur == 0 and len(seen) == self.n

    def ring_order(self) -> tuple[int, ...]:
        """Vertices in cyclic order starting at 0 (requires a ring)."""
        if not self.is_ring():
            raise ValueError("graph is not a ring")
        order = [0]
        prev, cur = None, 0
        for _ in range(self.n - 1):
            nxt = [u for u in self.neighbors(cur) if u != prev]
            prev, cur = cur, min(nxt) if prev is None else nxt[0]
            order.append(cur)
        return tuple(order)

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_json(cls, data: dict) -> "Graph":
        return cls.from_edges(int(data["n"]), data["edges"])


def ring_graph(n: int) -> Graph:
    """Even ring on n >= 4 vertices, edges (i, i+1 mod n)."""
    if n < 4 or n % 2 != 0:
        raise ValueError(f"ring size must be even and >= 4, got {n}")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


# Hardware ring layouts used for each even size on the 16-qubit device.
_DEFAULT_MAPS = {
    8: tuple(range(5, 13)),
    10: tuple(range(4, 14)),
    12: tuple(range(3, 15)),
    14: tuple(range(2, 16)),
    16: tuple(range(16)),
}


def default_qubit_map(n: int) -> tuple[int, ...]:
    """Physical ring embedding for an n-vertex ring on the 16-qubit ladder."""
    if n in _DEFAULT_MAPS:
        return _DEFAULT_MAPS[n]
    if n in (4, 6):
        m = n // 2
        top = list(range(1, m + 1))
        bottom = [17 - k for k in range(m, 1, -1)] + [0]
        return tuple(top + bottom)
    raise ValueError(f"no default qubit map for ring size {n}")


@dataclass(frozen=True)
class GraphStateSpec:
    """A graph plus an injective map from vertex i to a physical qubit label."""

    graph: Graph
    qubit_map: tuple[int, ...] = ()

    def __post_init__(self):
        qm = tuple(self.qubit_map) if self.qubit_map else tuple(range(self.graph.n))
        if len(qm) != self.graph.n:
            raise ValueError(f"qubit_map length {len(qm)} != n={self.graph.n}")
        if len(set(qm)) != len(qm):
            raise ValueError("qubit_map labels must be distinct")
        if any(q < 0 for q in qm):
            raise ValueError("qubit_map labels must be nonnegative")
        object.__setattr__(self, "qubit_map", qm)

    @property
    def n(self) -> int:
        return self.graph.n

    def physical_edges(self) -> list[tuple[int, int]]:
        qm = self.qubit_map
        return [(qm[a], qm[b]) for a, b in self.graph.sorted_edges()]

    def vertex_of(self, label: int) -> int:
        try:
            return self.qubit_map.index(label)
        except ValueError:
            raise ValueError(f"label {label} is not in the qubit map") from None

    def to_json(self) -> dict:
        out = self.graph.to_json()
        out["qubit_map"] = list(self.qubit_map)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "GraphStateSpec":
        return cls(Graph.from_json(data), tuple(data.get("qubit_map") or ()))


def ring_spec(n: int, qubit_map=None) -> GraphStateSpec:
    return GraphStateSpec(ring_graph(n), tuple(qubit_map) if qubit_map else default_qubit_map(n))


def stabilizer_generators(g: Graph) -> list[PauliString]:
    """K_a = X at a, Z at every neighbor, phase +1; one per vertex."""
    out = []
    for a in range(g.n):
        ops = ["I"] * g.n
        ops[a] = "X"
        for b in g.neighbors(a):
            ops[b] = "Z"
        out.append(PauliString("".join(ops)))
    return out


def ideal_statevector(g: Graph) -> np.ndarray:
    """Exact graph-state amplitudes; index bit for qubit q is bit (n-1-q)."""
    if g.n > STATEVECTOR_QUBIT_CAP:
        raise CapacityError(f"statevector capped at {STATEVECTOR_QUBIT_CAP} qubits, got {g.n}")
    n = g.n
    idx = np.arange(2**n, dtype=np.int64)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    parity = np.zeros(2**n, dtype=np.int64)
    for a, b in g.edges:
        parity ^= bits[:, a] & bits[:, b]
    amps = ((-1.0) ** parity) / np.sqrt(2.0**n)
    return amps.astype(complex)


def reduced_density_matrix(g: Graph, subset) -> DensityMatrix:
    """Exact reduced state on an ordered vertex subset, independent of g.n.

    Sums the stabilizer-group elements supported entirely inside the subset:
    rho_S = 2^-|S| * sum of restricted group elements. Only generator products
    K_T with T inside S can qualify (any a in T outside S leaves X or Y at a),
    and K_T qualifies iff every vertex outside S has an even number of
    neighbors in T.
    """
    subset = tuple(subset)
    if len(subset) != len(set(subset)):
        raise ValueError("subset vertices must be distinct")
    if any(not 0 <= v < g.n for v in subset):
        raise ValueError("subset vertex out of range")
    if not subset:
        raise ValueError("subset must be nonempty")
    if len(subset) > RDM_SUBSET_CAP:
        raise CapacityError(f"reduced states capped at {RDM_SUBSET_CAP} qubits, got {len(subset)}")

    k = len(subset)
    inside = set(subset)
    gens = stabilizer_generators(g)
    dim = 2**k
    acc = np.zeros((dim, dim), dtype=complex)
    pos = {v: i for i, v in enumerate(subset)}
    for include in itertools.product((0, 1), repeat=k):
        term = PauliString.identity(g.n)
        for v, take in zip(subset, include):
            if take:
                term = pauli_multiply(term, gens[v])
        if any(c != "I" for q, c in enumerate(term.ops) if q not in inside):
            continue
        restricted = ["I"] * k
        for q, c in enumerate(term.ops):
            if c != "I":
                restricted[pos[q]] = c
        acc += pauli_to_matrix(PauliString("".join(restricted), term.phase_exponent))
    return DensityMatrix(acc / dim)


def dense_reduced_density_matrix(state: np.ndarray, subset) -> np.ndarray:
    """Partial trace of a pure state down to the ordered qubit subset."""
    state = np.asarray(state, dtype=complex).ravel()
    n = state.size.bit_length() - 1
    if state.size != 2**n:
        raise ValueError("state length is not a power of two")
    subset = tuple(subset)
    if len(subset) != len(set(subset)) or any(not 0 <= q < n for q in subset):
        raise ValueError("subset must be distinct qubits in range")
    rest = [q for q in range(n) if q not in subset]
    psi = state.reshape((2,) * n).transpose(subset + tuple(rest)).reshape(2 ** len(subset), -1)
    return psi @ psi.conj().T
