"""Phase-tracked Pauli strings, local filters, and small dense density matrices.

Qubit 0 is the leftmost character of a string's text form and the most
significant tensor factor of its dense matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import CapacityError
from .tolerances import TOL

PAULI_CHARS = "IXYZ"
DENSE_QUBIT_CAP = 6

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

# (a, b) -> (a*b op, exponent of i), e.g. X*Y = iZ.
_MUL = {
    ("I", "I"): ("I", 0), ("I", "X"): ("X", 0), ("I", "Y"): ("Y", 0), ("I", "Z"): ("Z", 0),
    ("X", "I"): ("X", 0), ("X", "X"): ("I", 0), ("X", "Y"): ("Z", 1), ("X", "Z"): ("Y", 3),
    ("Y", "I"): ("Y", 0), ("Y", "X"): ("Z", 3), ("Y", "Y"): ("I", 0), ("Y", "Z"): ("X", 1),
    ("Z", "I"): ("Z", 0), ("Z", "X"): ("Y", 1), ("Z", "Y"): ("X", 3), ("Z", "Z"): ("I", 0),
}

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)
_PHASE_TEXT = {0: "", 1: "i", 2: "-", 3: "-i"}


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator with an exact unit phase i**phase_exponent."""

    ops: str
    phase_exponent: int = 0

    def __post_init__(self):
        if not self.ops or any(c not in PAULI_CHARS for c in self.ops):
            raise ValueError(f"ops must be a nonempty string over IXYZ, got {self.ops!r}")
        object.__setattr__(self, "phase_exponent", self.phase_exponent % 4)

    @property
    def n_qubits(self) -> int:
        return len(self.ops)

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exponent]

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.ops)

    def support(self) -> tuple[int, ...]:
        return tuple(q for q, c in enumerate(self.ops) if c != "I")

    def is_hermitian(self) -> bool:
        return self.phase_exponent % 2 == 0

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, qubit: int, op: str) -> "PauliString":
        if not 0 <= qubit < n:
            raise ValueError(f"qubit {qubit} out of range for {n} qubits")
        if op not in "XYZ":
            raise ValueError(f"op must be X, Y, or Z, got {op!r}")
        return cls("I" * qubit + op + "I" * (n - qubit - 1))

    @classmethod
    def from_text(cls, text: str) -> "PauliString":
        """Parse text like ``-iZXZI`` (optional sign, optional i, then ops)."""
        rest = text.strip()
        exponent = 0
        if rest.startswith(("+", "-")):
            if rest[0] == "-":
                exponent = 2
            rest = rest[1:]
        if rest.startswith("i"):
            exponent += 1
            rest = rest[1:]
        return cls(rest, exponent)

    def to_text(self) -> str:
        return _PHASE_TEXT[self.phase_exponent] + self.ops

    def __str__(self) -> str:
        return self.to_text()


def pauli_multiply(a: PauliString, b: PauliString) -> PauliString:
    """Product a*b with exact phase tracking."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("operands act on different qubit counts")
    exponent = a.phase_exponent + b.phase_exponent
    out = []
    for ca, cb in zip(a.ops, b.ops):
        op, k = _MUL[(ca, cb)]
        out.append(op)
        exponent += k
    return PauliString("".join(out), exponent)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff the operators commute (anticommuting positions are even)."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("operands act on different qubit counts")
    odd = 0
    for ca, cb in zip(a.ops, b.ops):
        if ca != "I" and cb != "I" and ca != cb:
            odd ^= 1
    return odd == 0


@lru_cache(maxsize=4096)
def _ops_matrix(ops: str) -> np.ndarray:
    m = _SINGLE[ops[0]]
    for c in ops[1:]:
        m = np.kron(m, _SINGLE[c])
    m.flags.writeable = False
    return m


def pauli_to_matrix(p: PauliString) -> np.ndarray:
    """Dense matrix of p, qubit 0 as the most significant factor."""
    if p.n_qubits > DENSE_QUBIT_CAP:
        raise CapacityError(
            f"dense expansion capped at {DENSE_QUBIT_CAP} qubits, got {p.n_qubits}"
        )
    return p.phase * _ops_matrix(p.ops)


@dataclass(frozen=True)
class DensityMatrix:
    """A dense k-qubit state, Hermitian with unit trace; PSD is not enforced
    (raw linear-inversion output may have negative eigenvalues)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        dim = m.shape[0]
        k = dim.bit_length() - 1
        if dim != 2**k:
            raise ValueError(f"dimension {dim} is not a power of two")
        if k > DENSE_QUBIT_CAP:
            raise CapacityError(f"dense states capped at {DENSE_QUBIT_CAP} qubits, got {k}")
        if np.abs(m - m.conj().T).max() > TOL.hermiticity:
            raise ValueError("matrix is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1.0) > TOL.trace_one or abs(np.trace(m).imag) > TOL.trace_one:
            raise ValueError(f"trace must be 1, got {np.trace(m)}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n_qubits(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    def expectation(self, p: PauliString) -> float:
        return expectation(self, p)


def expectation(rho: DensityMatrix | np.ndarray, p: PauliString) -> float:
    """tr(rho P) for a Hermitian Pauli string; the value is real."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if m.shape[0] != 2**p.n_qubits:
        raise ValueError("state and operator sizes differ")
    if not p.is_hermitian():
        raise ValueError("expectation of a non-Hermitian phase is not real")
    val = np.trace(m @ pauli_to_matrix(p))
    return float(val.real)


FILTER_KINDS = ("Z+", "Z-", "X+")

_FILTER_MATRICES = {
    "Z+": np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex),
    "Z-": np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex),
    "X+": np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex),
}


@dataclass(frozen=True)
class LocalFilter:
    """Single-qubit projector (P + I)/2 for P in {Z, -Z, X}; ``qubit`` is a
    position within the state the filter is applied to."""

    qubit: int
    kind: str

    def __post_init__(self):
        if self.qubit < 0:
            raise ValueError(f"qubit must be nonnegative, got {self.qubit}")
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"kind must be one of {FILTER_KINDS}, got {self.kind!r}")


def filter_matrix(f: LocalFilter) -> np.ndarray:
    """2x2 projector for the filter kind."""
    return _FILTER_MATRICES[f.kind].copy()
