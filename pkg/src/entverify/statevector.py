"""Dense statevector evolution for small circuits.

Used as the independent oracle route for sampling and for circuit
equivalence; qubit 0 is the most significant index bit.
"""

from __future__ import annotations

import numpy as np

from .errors import CapacityError

STATEVECTOR_CAP = 16

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
_GATES_1Q = {
    "H": _H,
    "S": np.diag([1.0, 1.0j]).astype(complex),
    "Sdg": np.diag([1.0, -1.0j]).astype(complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}
_CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def zero_state(n: int) -> np.ndarray:
    if n > STATEVECTOR_CAP:
        raise CapacityError(f"dense statevectors capped at {STATEVECTOR_CAP} qubits, got {n}")
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(n: int, index: int) -> np.ndarray:
    psi = zero_state(n)
    psi[0] = 0.0
    psi[index] = 1.0
    return psi


def apply_1q(psi: np.ndarray, n: int, u: np.ndarray, q: int) -> np.ndarray:
    t = psi.reshape((2,) * n)
    t = np.moveaxis(t, q, 0).reshape(2, -1)
    t = u @ t
    return np.moveaxis(t.reshape((2,) * n), 0, q).ravel()


def apply_2q(psi: np.ndarray, n: int, u: np.ndarray, a: int, b: int) -> np.ndarray:
    t = psi.reshape((2,) * n)
    t = np.moveaxis(t, (a, b), (0, 1)).reshape(4, -1)
    t = u @ t
    return np.moveaxis(t.reshape((2,) * n), (0, 1), (a, b)).ravel()


def apply_gate_dense(psi: np.ndarray, n: int, kind: str, qubits) -> np.ndarray:
    if kind in _GATES_1Q:
        return apply_1q(psi, n, _GATES_1Q[kind], qubits[0])
    if kind == "CZ":
        return apply_2q(psi, n, _CZ, qubits[0], qubits[1])
    if kind == "CNOT":
        return apply_2q(psi, n, _CNOT, qubits[0], qubits[1])
    raise ValueError(f"gate kind {kind!r} has no dense unitary")


def run_dense(circuit, initial: int = 0) -> np.ndarray:
    """Apply a measurement-free circuit to a computational basis state."""
    psi = basis_state(circuit.n_qubits, initial)
    for g in circuit.gates:
        if g.kind == "MeasureZ":
            raise ValueError("dense evolution does not support MeasureZ")
        psi = apply_gate_dense(psi, circuit.n_qubits, g.kind, g.qubits)
    return psi
