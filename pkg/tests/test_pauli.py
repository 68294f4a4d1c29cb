import itertools

import numpy as np
import pytest

from entverify.errors import CapacityError
from entverify.pauli import (
    DensityMatrix,
    LocalFilter,
    PauliString,
    commutes,
    expectation,
    filter_matrix,
    pauli_multiply,
    pauli_to_matrix,
)

SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_ops(ops):
    m = SINGLE[ops[0]]
    for c in ops[1:]:
        m = np.kron(m, SINGLE[c])
    return m


@pytest.mark.parametrize("n", [1, 2, 3])
def test_multiply_matches_matrix_product_exhaustive(n):
    for a_ops in itertools.product("IXYZ", repeat=n):
        for b_ops in itertools.product("IXYZ", repeat=n):
            a = PauliString("".join(a_ops))
            b = PauliString("".join(b_ops))
            prod = pauli_multiply(a, b)
            want = kron_ops(a.ops) @ kron_ops(b.ops)
            got = prod.phase * kron_ops(prod.ops)
            assert np.allclose(got, want, atol=1e-12)


def test_multiply_tracks_chain_stabilizer_product():
    a = PauliString("ZXZI")
    b = PauliString("IZXZ")
    prod = pauli_multiply(a, b)
    assert prod.ops == "ZYYZ"
    assert prod.phase == 1
    want = kron_ops("ZXZI") @ kron_ops("IZXZ")
    assert np.allclose(pauli_to_matrix(prod), want, atol=1e-12)


def test_multiply_phase_composes():
    a = PauliString("X", 1)  # iX
    b = PauliString("Y", 3)  # -iY
    prod = pauli_multiply(a, b)
    assert prod.ops == "Z"
    assert prod.phase == 1j  # (i)(-i)(i) from X*Y = iZ


def test_text_round_trip():
    for text in ["ZXZI", "-iZXZI", "iY", "-XX", "IIII"]:
        p = PauliString.from_text(text)
        assert p.to_text() == text
    assert PauliString.from_text("+X") == PauliString("X")
    assert PauliString.from_text("+iX").phase == 1j


def test_invalid_text_rejected():
    with pytest.raises(ValueError):
        PauliString("ABC")
    with pytest.raises(ValueError):
        PauliString("")
    with pytest.raises(ValueError):
        PauliString.from_text("i")


def test_weight_and_support():
    p = PauliString("IXYZ")
    assert p.weight == 3
    assert p.support() == (1, 2, 3)
    assert PauliString.identity(4).weight == 0
    assert PauliString.single(4, 2, "Y").ops == "IIYI"


def test_commutes_matches_dense_commutator():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        ops_a = "".join(rng.choice(list("IXYZ"), size=n))
        ops_b = "".join(rng.choice(list("IXYZ"), size=n))
        a, b = PauliString(ops_a), PauliString(ops_b)
        ma, mb = kron_ops(ops_a), kron_ops(ops_b)
        dense_commute = np.allclose(ma @ mb, mb @ ma, atol=1e-12)
        assert commutes(a, b) == dense_commute


def test_matrix_capacity_cap():
    with pytest.raises(CapacityError):
        pauli_to_matrix(PauliString.identity(7))
    pauli_to_matrix(PauliString.identity(6))


def test_expectation():
    plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
    rho = DensityMatrix(plus)
    assert expectation(rho, PauliString("X")) == pytest.approx(1.0)
    assert expectation(rho, PauliString("Z")) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        expectation(rho, PauliString("X", 1))


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1.0, 1.0], [0.0, 0.0]]))  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2))  # trace 2
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(3) / 3)  # not a qubit dimension
    with pytest.raises(CapacityError):
        DensityMatrix(np.eye(2**7) / 2**7)
    dm = DensityMatrix(np.eye(4) / 4)
    assert dm.n_qubits == 2
    # negative eigenvalues are allowed (raw linear inversion output)
    DensityMatrix(np.diag([1.2, -0.2, 0.0, 0.0]).astype(complex))


def test_filters_are_projectors():
    for kind in ("Z+", "Z-", "X+"):
        m = filter_matrix(LocalFilter(0, kind))
        assert np.allclose(m, m.conj().T)
        assert np.allclose(m @ m, m)
        evals = np.linalg.eigvalsh(m)
        assert np.allclose(sorted(evals), [0.0, 1.0], atol=1e-12)
    assert np.allclose(
        filter_matrix(LocalFilter(0, "Z+")) + filter_matrix(LocalFilter(0, "Z-")), np.eye(2)
    )
    with pytest.raises(ValueError):
        LocalFilter(0, "Y+")
    with pytest.raises(ValueError):
        LocalFilter(-1, "Z+")
