import json

import numpy as np
import pytest

from entverify.circuits import (
    IBMQX5,
    Circuit,
    DeviceModel,
    Gate,
    equivalent,
    get_device,
    lower,
    optimize,
    schedule,
    synthesize,
)
from entverify.errors import CapacityError, CompilationError
from entverify.graphs import GraphStateSpec, ideal_statevector, ring_graph, ring_spec
from entverify.statevector import run_dense


def compile_ring(n):
    c = synthesize(ring_spec(n))
    c = optimize(c)
    c = lower(c, IBMQX5)
    c = optimize(c)
    return schedule(c)


def random_circuit(rng, n, m, with_measure=False):
    kinds_1q = ["H", "S", "Sdg", "X", "Z"]
    gates = []
    for _ in range(m):
        if rng.random() < 0.4:
            pair = rng.choice(n, size=2, replace=False)
            gates.append(Gate(rng.choice(["CZ", "CNOT"]), tuple(int(q) for q in pair)))
        else:
            gates.append(Gate(rng.choice(kinds_1q), (int(rng.integers(n)),)))
    if with_measure:
        for q in range(n):
            gates.append(Gate("MeasureZ", (q,)))
    return Circuit(n, tuple(gates))


def test_gate_validation():
    assert Gate("CZ", (3, 1)).qubits == (3, 1)
    with pytest.raises(ValueError):
        Gate("T", (0,))
    with pytest.raises(ValueError):
        Gate("H", (0, 1))
    with pytest.raises(ValueError):
        Gate("CNOT", (2,))
    with pytest.raises(ValueError):
        Gate("CZ", (1, 1))
    with pytest.raises(ValueError):
        Gate("X", (-1,))


def test_circuit_validation():
    g = (Gate("H", (0,)), Gate("CNOT", (0, 1)))
    c = Circuit(2, g)
    assert c.layers is None
    with pytest.raises(ValueError):
        Circuit(1, g)
    with pytest.raises(ValueError):
        Circuit(2, g, layers=((0,),))
    with pytest.raises(ValueError):
        Circuit(2, g, layers=((0, 1),))
    ok = Circuit(2, (Gate("H", (0,)), Gate("H", (1,))), layers=((0, 1),))
    assert ok.two_qubit_depth() == 0


def test_circuit_json_round_trip():
    rng = np.random.default_rng(7)
    c = schedule(random_circuit(rng, 4, 15, with_measure=True))
    data = json.loads(json.dumps(c.to_json()))
    back = Circuit.from_json(data)
    assert back == c
    plain = Circuit(3, (Gate("CZ", (0, 2)),))
    assert Circuit.from_json(plain.to_json()) == plain


def test_ibmqx5_model():
    dev = get_device("ibmqx5")
    assert dev is IBMQX5
    assert dev.n_qubits == 16
    assert len(dev.couplings) == 22
    assert (6, 11) in dev.couplings and (11, 6) not in dev.couplings
    assert dev.coupled(11, 6)
    assert dev.error_1q == 0.002
    assert dev.error_2q == 0.04
    assert dev.readout_error == 0.065


def test_device_json_and_file_loading(tmp_path):
    back = DeviceModel.from_json(IBMQX5.to_json())
    assert back == IBMQX5
    path = tmp_path / "toy.json"
    toy = DeviceModel("toy", 3, frozenset({(0, 1), (1, 2)}), 0.01, 0.05, 0.1)
    path.write_text(json.dumps(toy.to_json()))
    assert get_device(str(path)) == toy
    with pytest.raises(ValueError):
        get_device("nope")
    with pytest.raises(ValueError):
        DeviceModel("bad", 2, frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        DeviceModel("bad", 2, frozenset({(0, 1)}), error_2q=1.5)


def test_synthesize_structure():
    spec = ring_spec(8)
    c = synthesize(spec)
    assert c.n_qubits == 13  # highest mapped qubit is 12
    counts = c.counts_by_kind()
    assert counts == {"H": 8, "CZ": 8}
    assert all(g.kind == "H" for g in c.gates[:8])
    wide = synthesize(spec, n_qubits=16)
    assert wide.n_qubits == 16
    with pytest.raises(ValueError):
        synthesize(spec, n_qubits=5)


def test_synthesize_prepares_graph_state():
    for n in (4, 6):
        g = ring_graph(n)
        spec = GraphStateSpec(g)  # identity layout
        psi = run_dense(synthesize(spec))
        np.testing.assert_allclose(psi, ideal_statevector(g), atol=1e-12)


def test_lower_rewrites_cz():
    c = lower(synthesize(ring_spec(8)), IBMQX5)
    counts = c.counts_by_kind()
    assert counts == {"H": 24, "CNOT": 8}
    for g in c.gates:
        if g.kind == "CNOT":
            assert g.qubits in IBMQX5.couplings
    # H / CNOT / H sandwich shares the target qubit
    idx = [i for i, g in enumerate(c.gates) if g.kind == "CNOT"]
    for i in idx:
        tgt = c.gates[i].qubits[1]
        assert c.gates[i - 1] == Gate("H", (tgt,))
        assert c.gates[i + 1] == Gate("H", (tgt,))


def test_lower_direction_tie_break():
    both = DeviceModel("both", 2, frozenset({(0, 1), (1, 0)}))
    c = lower(Circuit(2, (Gate("CZ", (1, 0)),)), both)
    assert Gate("CNOT", (0, 1)) in c.gates


def test_lower_errors():
    with pytest.raises(CompilationError):
        lower(Circuit(16, (Gate("CZ", (0, 2)),)), IBMQX5)
    with pytest.raises(CompilationError):
        lower(Circuit(16, (Gate("CNOT", (0, 1)),)), IBMQX5)  # only (1, 0) exists
    with pytest.raises(CompilationError):
        lower(Circuit(17, ()), IBMQX5)
    passthrough = lower(Circuit(16, (Gate("CNOT", (1, 0)), Gate("X", (4,)))), IBMQX5)
    assert passthrough.counts_by_kind() == {"CNOT": 1, "X": 1}


def test_optimize_cancels_h_pairs():
    h0 = Gate("H", (0,))
    assert optimize(Circuit(2, (h0, h0))).gates == ()
    kept = optimize(Circuit(2, (h0, Gate("X", (0,)), h0)))
    assert len(kept.gates) == 3
    skipped = optimize(Circuit(2, (h0, Gate("H", (1,)), h0)))
    assert skipped.gates == (Gate("H", (1,)),)
    blocked = optimize(Circuit(2, (h0, Gate("CZ", (0, 1)), h0)))
    assert len(blocked.gates) == 3
    quad = optimize(Circuit(1, (h0, h0, h0, h0)))
    assert quad.gates == ()


def test_optimize_is_idempotent_and_sound():
    rng = np.random.default_rng(123)
    for _ in range(20):
        c = random_circuit(rng, 4, 25)
        opt = optimize(c)
        assert optimize(opt) == opt
        assert equivalent(c, opt)
        assert len(opt.gates) <= len(c.gates)


def test_optimized_ring_preparation_is_lean():
    base = lower(synthesize(ring_spec(8)), IBMQX5)
    opt = optimize(base)
    counts = opt.counts_by_kind()
    assert counts["CNOT"] == 8
    assert counts["H"] == 12  # down from 24
    assert equivalent(base, opt)


def test_schedule_layer_invariants():
    rng = np.random.default_rng(5)
    for _ in range(10):
        c = random_circuit(rng, 5, 30, with_measure=True)
        s = schedule(c)
        assert s.layers is not None  # Circuit validates partition + disjointness
        for layer in s.layers:
            kinds = {s.gates[i].kind in ("CZ", "CNOT") for i in layer}
            assert len(kinds) == 1  # never mixes 1q and 2q gates
        assert sorted(g.to_json()["kind"] for g in s.gates) == sorted(
            g.to_json()["kind"] for g in c.gates
        )


def test_schedule_preserves_semantics():
    rng = np.random.default_rng(17)
    for _ in range(15):
        c = random_circuit(rng, 4, 25)
        assert equivalent(c, schedule(c))


def test_schedule_keeps_measure_ordered():
    c = Circuit(1, (Gate("H", (0,)), Gate("MeasureZ", (0,)), Gate("H", (0,))))
    s = schedule(c)
    assert [g.kind for g in s.gates] == ["H", "MeasureZ", "H"]
    assert len(s.layers) == 3


def test_ring_pipeline_two_qubit_depth():
    for n in (8, 12, 16):
        s = compile_ring(n)
        assert s.two_qubit_depth() == 2
        assert s.counts_by_kind()["CNOT"] == n


def test_all_default_layouts_compile():
    for n in (4, 6, 8, 10, 12, 14, 16):
        s = compile_ring(n)
        assert s.counts_by_kind()["CNOT"] == n
        assert equivalent(s, lower(synthesize(ring_spec(n), n_qubits=16), IBMQX5))


def test_equivalent_global_phase_and_negatives():
    a = Circuit(1, (Gate("X", (0,)), Gate("Z", (0,))))
    b = Circuit(1, (Gate("Z", (0,)), Gate("X", (0,))))
    assert equivalent(a, b)  # differ by a global -1
    c = Circuit(2, (Gate("H", (0,)),))
    d = Circuit(2, (Gate("H", (0,)), Gate("X", (1,))))
    assert not equivalent(c, d)
    with pytest.raises(ValueError):
        equivalent(c, Circuit(3, ()))
    with pytest.raises(ValueError):
        equivalent(Circuit(1, (Gate("MeasureZ", (0,)),)), Circuit(1, ()))
    with pytest.raises(CapacityError):
        equivalent(Circuit(17, ()), Circuit(17, ()))
