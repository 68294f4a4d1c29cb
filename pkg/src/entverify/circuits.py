"""Clifford circuits, device models, and the graph-state compilation chain:
synthesize -> lower -> optimize -> schedule, plus an equivalence checker.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, CompilationError
from .graphs import GraphStateSpec
from .statevector import run_dense
from .tolerances import TOL

GATE_KINDS = ("H", "S", "Sdg", "X", "Z", "CZ", "CNOT", "MeasureZ")
ONE_QUBIT_KINDS = ("H", "S", "Sdg", "X", "Z", "MeasureZ")
TWO_QUBIT_KINDS = ("CZ", "CNOT")
_DIAGONAL_KINDS = ("S", "Sdg", "Z", "CZ")

EQUIVALENCE_FULL_CAP = 8
EQUIVALENCE_CAP = 16


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qs = tuple(int(q) for q in self.qubits)
        arity = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(qs) != arity:
            raise ValueError(f"{self.kind} takes {arity} qubit(s), got {qs}")
        if len(set(qs)) != len(qs):
            raise ValueError(f"{self.kind} qubits must be distinct, got {qs}")
        if any(q < 0 for q in qs):
            raise ValueError(f"qubit indices must be nonnegative, got {qs}")
        object.__setattr__(self, "qubits", qs)

    def to_json(self) -> dict:
        return {"kind": self.kind, "qubits": list(self.qubits)}

    @classmethod
    def from_json(cls, data: dict) -> "Gate":
        return cls(data["kind"], tuple(data["qubits"]))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    layers: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        for g in self.gates:
            if any(q >= self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} out of range for {self.n_qubits} qubits")
        if self.layers is not None:
            layers = tuple(tuple(layer) for layer in self.layers)
            flat = [i for layer in layers for i in layer]
            if sorted(flat) != list(range(len(self.gates))):
                raise ValueError("layers must partition the gate indices")
            if flat != sorted(flat):
                raise ValueError("layer order must respect gate order")
            for layer in layers:
                used: set[int] = set()
                for i in layer:
                    qs = set(self.gates[i].qubits)
                    if used & qs:
                        raise ValueError("gates within a layer must act on disjoint qubits")
                    used |= qs
            object.__setattr__(self, "layers", layers)

    def counts_by_kind(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates:
            out[g.kind] = out.get(g.kind, 0) + 1
        return out

    def two_qubit_depth(self) -> int:
        """Number of distinct layers containing a two-qubit gate."""
        layers = self.layers
        if layers is None:
            layers = schedule(self).layers
        return sum(
            1 for layer in layers if any(self.gates[i].kind in TWO_QUBIT_KINDS for i in layer)
        )

    def to_json(self) -> dict:
        out = {"n": self.n_qubits, "gates": [g.to_json() for g in self.gates]}
        out["layers"] = [list(l) for l in self.layers] if self.layers is not None else None
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Circuit":
        layers = data.get("layers")
        return cls(
            int(data["n"]),
            tuple(Gate.from_json(g) for g in data["gates"]),
            tuple(tuple(l) for l in layers) if layers is not None else None,
        )


@dataclass(frozen=True)
class DeviceModel:
    """Directed couplings (control, target) plus default error rates."""

    name: str
    n_qubits: int
    couplings: frozenset[tuple[int, int]]
    error_1q: float = 0.0
    error_2q: float = 0.0
    readout_error: float = 0.0

    def __post_init__(self):
        for c, t in self.couplings:
            if c == t or not (0 <= c < self.n_qubits and 0 <= t < self.n_qubits):
                raise ValueError(f"bad coupling ({c}, {t})")
        for p in (self.error_1q, self.error_2q, self.readout_error):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"error rate {p} outside [0, 1]")

    def coupled(self, a: int, b: int) -> bool:
        return (a, b) in self.couplings or (b, a) in self.couplings

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "n_qubits": self.n_qubits,
            "couplings": sorted(list(c) for c in self.couplings),
            "error_1q": self.error_1q,
            "error_2q": self.error_2q,
            "readout_error": self.readout_error,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DeviceModel":
        return cls(
            data.get("name", "custom"),
            int(data["n_qubits"]),
            frozenset((int(a), int(b)) for a, b in data["couplings"]),
            float(data.get("error_1q", 0.0)),
            float(data.get("error_2q", 0.0)),
            float(data.get("readout_error", 0.0)),
        )


# 16-qubit 2x8 ladder; arrows follow the hardware's fixed CNOT directions.
IBMQX5 = DeviceModel(
    name="ibmqx5",
    n_qubits=16,
    couplings=frozenset(
        {
            (1, 0), (1, 2), (2, 3), (3, 4), (3, 14), (5, 4), (6, 5), (6, 7),
            (6, 11), (7, 10), (8, 7), (9, 8), (9, 10), (11, 10), (12, 5),
            (12, 11), (12, 13), (13, 4), (13, 14), (15, 0), (15, 2), (15, 14),
        }
    ),
    error_1q=0.002,
    error_2q=0.04,
    readout_error=0.065,
)

_DEVICES = {"ibmqx5": IBMQX5}


def get_device(name: str) -> DeviceModel:
    """Look up a built-in device or load a DeviceModel JSON file."""
    if name in _DEVICES:
        return _DEVICES[name]
    try:
        with open(name) as fh:
            return DeviceModel.from_json(json.load(fh))
    except OSError:
        raise ValueError(f"unknown device {name!r} (not built-in, not a readable file)") from None


def synthesize(spec: GraphStateSpec, n_qubits: int | None = None) -> Circuit:
    """H on every mapped qubit, then CZ along every edge (sorted order)."""
    labels = spec.qubit_map
    width = max(labels) + 1
    if n_qubits is not None:
        if n_qubits < width:
            raise ValueError(f"n_qubits={n_qubits} too small for labels up to {width - 1}")
        width = n_qubits
    gates = [Gate("H", (q,)) for q in labels]
    gates += [Gate("CZ", (a, b)) for a, b in spec.physical_edges()]
    return Circuit(width, tuple(gates))


def lower(c: Circuit, device: DeviceModel) -> Circuit:
    """Rewrite CZ as H/CNOT/H along an available coupling direction.

    When both directions exist the lower physical index becomes the control.
    Raw CNOT gates must already match a coupling.
    """
    if c.n_qubits > device.n_qubits:
        raise CompilationError(
            f"circuit uses {c.n_qubits} qubits but device has {device.n_qubits}"
        )
    gates: list[Gate] = []
    for g in c.gates:
        if g.kind == "CZ":
            a, b = g.qubits
            fwd, rev = (a, b) in device.couplings, (b, a) in device.couplings
            if fwd and rev:
                ctl, tgt = min(a, b), max(a, b)
            elif fwd:
                ctl, tgt = a, b
            elif rev:
                ctl, tgt = b, a
            else:
                raise CompilationError(f"no coupling between qubits {a} and {b}")
            gates += [Gate("H", (tgt,)), Gate("CNOT", (ctl, tgt)), Gate("H", (tgt,))]
        elif g.kind == "CNOT":
            if g.qubits not in device.couplings:
                raise CompilationError(f"no coupling for CNOT{g.qubits}")
            gates.append(g)
        else:
            gates.append(g)
    return Circuit(device.n_qubits, tuple(gates))


def _gates_commute(a: Gate, b: Gate) -> bool:
    """Conservative syntactic commutation check."""
    sa, sb = set(a.qubits), set(b.qubits)
    shared = sa & sb
    if not shared:
        return True
    if a.kind == "MeasureZ" or b.kind == "MeasureZ":
        return False
    if a.kind == b.kind and a.qubits == b.qubits:
        return True
    if a.kind in _DIAGONAL_KINDS and b.kind in _DIAGONAL_KINDS:
        return True
    if a.kind == "CNOT" and b.kind == "CNOT":
        # Fine when overlaps are control-control or target-target only.
        return a.qubits[0] != b.qubits[1] and a.qubits[1] != b.qubits[0]
    for cnot, other in ((a, b), (b, a)):
        if cnot.kind != "CNOT":
            continue
        ctl, tgt = cnot.qubits
        if other.kind in _DIAGONAL_KINDS and tgt not in other.qubits:
            return True
        if other.kind == "X" and other.qubits[0] == tgt:
            return True
    return False


def _regroup_commuting_runs(gates: list[Gate]) -> list[Gate]:
    """Within each contiguous run of mutually commuting two-qubit gates,
    repack into greedy disjoint-support groups (enables layer packing)."""
    out: list[Gate] = []
    i = 0
    while i < len(gates):
        if gates[i].kind not in TWO_QUBIT_KINDS:
            out.append(gates[i])
            i += 1
            continue
        j = i
        while j < len(gates) and gates[j].kind in TWO_QUBIT_KINDS:
            j += 1
        run = gates[i:j]
        if all(
            _gates_commute(run[p], run[q])
            for p in range(len(run))
            for q in range(p + 1, len(run))
        ):
            groups: list[tuple[list[Gate], set[int]]] = []
            for g in run:
                for members, used in groups:
                    if not (used & set(g.qubits)):
                        members.append(g)
                        used |= set(g.qubits)
                        break
                else:
                    groups.append(([g], set(g.qubits)))
            run = [g for members, _ in groups for g in members]
        out += run
        i = j
    return out


def _cancel_h_pairs(gates: list[Gate]) -> list[Gate]:
    """Drop H..H pairs on the same qubit with nothing touching it in between."""
    kept = list(gates)
    changed = True
    while changed:
        changed = False
        for i, g in enumerate(kept):
            if g is None or g.kind != "H":
                continue
            q = g.qubits[0]
            for j in range(i + 1, len(kept)):
                h = kept[j]
                if h is None or q not in h.qubits:
                    continue
                if h.kind == "H":
                    kept[i] = kept[j] = None
                    changed = True
                break
            if changed:
                break
        kept = [g for g in kept if g is not None]
    return kept


def optimize(c: Circuit) -> Circuit:
    """Peephole pass: regroup commuting two-qubit runs for packing and cancel
    redundant H pairs, iterated to a fixpoint. No Clifford resynthesis."""
    gates = list(c.gates)
    while True:
        new = _cancel_h_pairs(_regroup_commuting_runs(gates))
        if new == gates:
            break
        gates = new
    return Circuit(c.n_qubits, tuple(gates))


def schedule(c: Circuit) -> Circuit:
    """Greedy disjoint-support layering, keeping one-qubit and two-qubit
    layers separate; commuting gates may be packed into earlier layers.
    The returned circuit's gates are re-emitted in layer order."""
    kinds = ["2q" if g.kind in TWO_QUBIT_KINDS else "1q" for g in c.gates]
    layer_of: list[int] = []
    layers: list[dict] = []
    for i, g in enumerate(c.gates):
        lb = 0
        for j in range(i):
            if set(c.gates[j].qubits) & set(g.qubits) and not _gates_commute(c.gates[j], g):
                lb = max(lb, layer_of[j] + 1)
        placed = None
        for li in range(lb, len(layers)):
            if layers[li]["kind"] == kinds[i] and not (layers[li]["used"] & set(g.qubits)):
                placed = li
                break
        if placed is None:
            layers.append({"kind": kinds[i], "used": set(), "members": []})
            placed = len(layers) - 1
        layers[placed]["used"] |= set(g.qubits)
        layers[placed]["members"].append(i)
        layer_of.append(placed)
    order = [i for layer in layers for i in layer["members"]]
    new_gates = tuple(c.gates[i] for i in order)
    new_layers = []
    k = 0
    for layer in layers:
        new_layers.append(tuple(range(k, k + len(layer["members"]))))
        k += len(layer["members"])
    return Circuit(c.n_qubits, new_gates, tuple(new_layers))


def equivalent(a: Circuit, b: Circuit) -> bool:
    """State equivalence up to one global phase; all basis states are checked
    up to 8 qubits, the all-zeros input only from 9 to 16."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("circuits act on different qubit counts")
    n = a.n_qubits
    if n > EQUIVALENCE_CAP:
        raise CapacityError(f"equivalence checking capped at {EQUIVALENCE_CAP} qubits")
    if any(g.kind == "MeasureZ" for g in a.gates + b.gates):
        raise ValueError("equivalence is defined for measurement-free circuits")
    inputs = range(2**n) if n <= EQUIVALENCE_FULL_CAP else (0,)
    phase = None
    for idx in inputs:
        va = run_dense(a, idx)
        vb = run_dense(b, idx)
        if phase is None:
            ref = int(np.argmax(np.abs(va)))
            if abs(vb[ref]) < TOL.phase_match:
                return False
            phase = va[ref] / vb[ref]
            phase /= abs(phase)
        if np.abs(va - phase * vb).max() > TOL.phase_match:
            return False
    return True
