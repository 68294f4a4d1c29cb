import numpy as np
import pytest

from conftest import exact_chain_dataset, sampled_chain_dataset
from entverify.analysis import (
    EntanglementVerdict,
    NegativityEstimate,
    SeparationHypothesis,
    _partial_trace,
    apply_filters,
    bootstrap,
    dist2_negativity,
    dist3_negativity,
    fidelity,
    fidelity_upper_bound,
    infer_full_entanglement,
    negativity,
    nn_filter_negativity,
    partial_transpose,
    pt_test,
    thread_limit,
    trace_distance,
)
from entverify.errors import AnnihilationError
from entverify.graphs import Graph, GraphStateSpec, reduced_density_matrix, ring_graph
from entverify.pauli import DensityMatrix, LocalFilter
from entverify.tomography import (
    ReconstructedState,
    SettingBlock,
    TomographyDataset,
    reconstruct,
)

BELL = np.zeros((4, 4), dtype=complex)
BELL[np.ix_((0, 3), (0, 3))] = 0.5

# |0+> + |1->, the two-qubit state the end filters leave on the middle pair
PHI = np.outer([1, 1, 1, -1], [1, 1, 1, -1]).astype(complex) / 4


def chain_state(n=8):
    return reduced_density_matrix(ring_graph(n), (0, 1, 2, 3))


def random_density(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def make_estimate(pair, value, significant, protocol="nn-filter"):
    lo = value / 2 if significant else -0.01
    return NegativityEstimate(
        value=value,
        stddev=0.01,
        ci_low=lo,
        ci_high=value + 0.05,
        pair=pair,
        protocol=protocol,
    )


def ring_results(order, insignificant=()):
    n = len(order)
    out = []
    for i in range(n):
        pair = (order[i], order[(i + 1) % n])
        bad = frozenset(pair) in {frozenset(p) for p in insignificant}
        out.append((pair, make_estimate(pair, 0.01 if bad else 0.4, not bad)))
    return out


def canonical(hypotheses):
    return {frozenset((frozenset(h.block_a), frozenset(h.block_b))) for h in hypotheses}


def test_partial_transpose_involution_and_trace():
    rng = np.random.default_rng(3)
    rho = random_density(rng, 16)
    for subset in [(0,), (2,), (0, 1), (1, 3)]:
        pt = partial_transpose(rho, subset)
        assert np.trace(pt) == pytest.approx(1.0)
        assert np.abs(partial_transpose(pt, subset) - rho).max() < 1e-12
        assert np.abs(pt - pt.conj().T).max() < 1e-12


def test_partial_transpose_bell_minimum_eigenvalue():
    w = np.linalg.eigvalsh(partial_transpose(BELL, (0,)))
    assert w.min() == pytest.approx(-0.5, abs=1e-12)


def test_partial_transpose_rejects_bad_subset():
    with pytest.raises(ValueError):
        partial_transpose(BELL, (2,))
    with pytest.raises(ValueError):
        partial_transpose(BELL, (0, 0))


def test_negativity_known_values():
    assert negativity(BELL, (0,)) == pytest.approx(0.5, abs=1e-9)
    assert negativity(np.eye(4) / 4, (0,)) == 0.0
    assert negativity(PHI, (1,)) == pytest.approx(0.5, abs=1e-9)
    assert negativity(chain_state(), (0, 1)) == pytest.approx(0.5, abs=1e-9)
    assert negativity(chain_state(), (0, 3)) == pytest.approx(0.0, abs=1e-9)


def test_negativity_ignores_eigenvalue_dust():
    # mix ratio tuned so the smallest PT eigenvalue sits inside the cutoff
    lam = (0.25 + 5e-11) / 0.75
    rho = (1 - lam) * np.eye(4) / 4 + lam * BELL
    assert negativity(rho, (0,)) == 0.0
    lam = (0.25 + 5e-9) / 0.75
    rho = (1 - lam) * np.eye(4) / 4 + lam * BELL
    assert negativity(rho, (0,)) == pytest.approx(5e-9, rel=0.01)


def test_negativity_local_unitary_invariance():
    rng = np.random.default_rng(11)
    for _ in range(5):
        rho = random_density(rng, 16)
        singles = [random_unitary(rng, 2) for _ in range(4)]
        u = singles[0]
        for s in singles[1:]:
            u = np.kron(u, s)
        rotated = u @ rho @ u.conj().T
        for subset in [(0, 1), (1,)]:
            assert negativity(rotated, subset) == pytest.approx(
                negativity(rho, subset), abs=1e-9
            )
        # entangling unitaries inside each block of the {0,1}|{2,3} cut
        ub = np.kron(random_unitary(rng, 4), random_unitary(rng, 4))
        rotated = ub @ rho @ ub.conj().T
        assert negativity(rotated, (0, 1)) == pytest.approx(
            negativity(rho, (0, 1)), abs=1e-9
        )


def test_ppt_soundness_on_separable_states():
    rng = np.random.default_rng(17)
    cuts = [(0,), (1,), (2,), (3,), (0, 1), (0, 2), (0, 3)]
    for _ in range(100):
        terms = rng.integers(2, 7)
        probs = rng.dirichlet(np.ones(terms))
        rho = np.zeros((16, 16), dtype=complex)
        for p in probs:
            factors = np.array([1.0])
            for _ in range(4):
                v = rng.normal(size=2) + 1j * rng.normal(size=2)
                v /= np.linalg.norm(v)
                factors = np.kron(factors, v)
            rho += p * np.outer(factors, factors.conj())
        for cut in cuts:
            assert negativity(rho, cut) <= 1e-9


def test_apply_filters_reduces_chain_to_middle_pair():
    out = apply_filters(
        chain_state(), (LocalFilter(0, "Z+"), LocalFilter(3, "Z+")), trace_out=(0, 3)
    )
    assert np.abs(out.matrix - PHI).max() < 1e-12


def test_apply_filters_no_filters_is_partial_trace():
    rng = np.random.default_rng(5)
    a = random_density(rng, 4)
    b = random_density(rng, 2)
    rho = np.kron(a, b)
    out = apply_filters(rho, (), trace_out=(2,))
    assert np.abs(out.matrix - a).max() < 1e-10


def test_apply_filters_annihilation():
    one = np.zeros((2, 2), dtype=complex)
    one[1, 1] = 1.0
    rho = np.kron(one, np.eye(2) / 2)
    with pytest.raises(AnnihilationError):
        apply_filters(rho, (LocalFilter(0, "Z+"),), trace_out=(0,))


def test_apply_filters_validates_positions():
    with pytest.raises(ValueError):
        apply_filters(BELL, (LocalFilter(0, "Z+"), LocalFilter(0, "X+")), ())
    with pytest.raises(ValueError):
        apply_filters(BELL, (), trace_out=(5,))
    with pytest.raises(ValueError):
        apply_filters(BELL, (), trace_out=(0, 0))


def test_nn_filter_negativity_values():
    assert nn_filter_negativity(chain_state()) == pytest.approx(0.5, abs=1e-9)
    for n in (10, 12, 14, 16):
        assert nn_filter_negativity(chain_state(n)) == pytest.approx(0.5, abs=1e-9)
    assert nn_filter_negativity(np.eye(16) / 16) == 0.0


@pytest.fixture(scope="module")
def postselected_ring8():
    ds = exact_chain_dataset(ring_graph(8), (1, 2, 3, 4))
    return ds.postselect({0: 0, 5: 0}, warn=False)


def test_dist2_negativity_ideal(postselected_ring8):
    assert postselected_ring8.retained() == pytest.approx(0.25, abs=1e-9)
    assert dist2_negativity(postselected_ring8) == pytest.approx(0.5, abs=1e-9)


def test_dist3_negativity_ideal(postselected_ring8):
    assert dist3_negativity(postselected_ring8) == pytest.approx(0.5, abs=1e-9)


def test_pt_test_point_estimate():
    est = pt_test(chain_state(), (0, 1), pair=(5, 6, 7, 8))
    assert est.value == pytest.approx(0.5, abs=1e-9)
    assert est.ci_low == est.value == est.ci_high
    assert est.protocol == "pt-test"
    assert est.pair == (5, 6, 7, 8)
    assert est.significant
    flat = pt_test(chain_state(), (0, 3))
    assert flat.value == pytest.approx(0.0, abs=1e-9)
    assert not flat.significant


def test_negativity_estimate_validation():
    with pytest.raises(ValueError):
        NegativityEstimate(0.3, 0.01, 0.4, 0.5, (), "nn-filter")
    with pytest.raises(ValueError):
        NegativityEstimate(-0.1, 0.01, -0.2, 0.0, (), "nn-filter")
    with pytest.raises(ValueError):
        NegativityEstimate(0.3, 0.01, 0.2, 0.4, (), "sorcery")
    est = NegativityEstimate(0.3, 0.01, 0.2, 0.4, (1, 2), "dist2")
    assert NegativityEstimate.from_json(est.to_json()) == est


def test_bootstrap_zero_variance_collapses_interval():
    bits = np.zeros((1, 4), dtype=np.uint8)
    blocks = {"ZZZZ": SettingBlock(bits, np.array([20.0]))}
    ds = TomographyDataset((0, 1, 2, 3), (0, 1, 2, 3), blocks)
    stat = lambda d: d.blocks["ZZZZ"].weights.sum() / 80.0
    est = bootstrap(ds, stat, resamples=200, seed=0)
    assert est.value == 0.25
    assert est.ci_low == est.ci_high == est.value
    assert est.stddev == 0.0


def test_bootstrap_validates_arguments(postselected_ring8):
    ds = postselected_ring8
    with pytest.raises(ValueError):
        bootstrap(ds, lambda d: 0.0, resamples=0)
    with pytest.raises(ValueError):
        bootstrap(ds, lambda d: 0.0, level=1.0)


def test_bootstrap_bell_interval_tight_and_honest():
    spec = GraphStateSpec(Graph(4, ((0, 1),)))
    rng = np.random.default_rng(np.random.SeedSequence(7))
    ds = sampled_chain_dataset(spec, (0, 1, 2, 3), 2048, rng)
    ds = ds.marginalize((0, 1, 2, 3))

    def pair_negativity(d):
        raw = reconstruct(d, project=False).raw
        return negativity(_partial_trace(raw, 4, (2, 3)), (0,))

    est = bootstrap(
        ds, pair_negativity, resamples=1000, seed=11, pair=(0, 1), protocol="pt-test"
    )
    assert est.ci_high - est.ci_low < 0.05
    assert est.ci_low <= 0.5 <= est.ci_high


def test_bootstrap_coverage():
    master = np.random.SeedSequence(20260816)
    hits = 0
    vals = np.array([0.0, 1.0, 2.0, 3.0]) / 3.0
    bits = np.array([[0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0], [1, 1, 0, 0]], np.uint8)
    for child in master.spawn(200):
        rng = np.random.default_rng(child)
        probs = rng.dirichlet(np.ones(4) * 4.0)
        truth = float(probs @ vals)
        counts = rng.multinomial(600, probs).astype(float)
        ds = TomographyDataset(
            (0, 1, 2, 3), (0, 1, 2, 3), {"ZZZZ": SettingBlock(bits, counts)}
        )

        def stat(d):
            b = d.blocks["ZZZZ"]
            key = b.bits[:, 0] + 2 * b.bits[:, 1]
            return float((vals[key] * b.weights).sum() / b.weights.sum())

        est = bootstrap(ds, stat, resamples=999, seed=child.spawn(1)[0])
        hits += est.ci_low <= truth <= est.ci_high
    assert 0.92 <= hits / 200 <= 0.98


def test_separation_hypothesis_validation():
    h = SeparationHypothesis((3, 1), (2,))
    assert h.block_a == (1, 3)
    assert h.side_of(2) == "b"
    with pytest.raises(ValueError):
        SeparationHypothesis((), (1,))
    with pytest.raises(ValueError):
        SeparationHypothesis((1, 2), (2, 3))


def test_inference_all_significant_is_fully_entangled():
    order = list(range(5, 13))
    verdict = infer_full_entanglement(8, ring_results(order))
    assert verdict.status == "FullyEntangled"
    assert verdict.hypotheses == ()


def test_inference_single_weak_edge_cannot_separate():
    order = list(range(16))
    verdict = infer_full_entanglement(16, ring_results(order, [(4, 5)]))
    assert verdict.status == "FullyEntangled"


def test_inference_twelve_qubit_pattern():
    order = list(range(3, 15))
    results = ring_results(order, [(9, 10), (14, 3)])
    verdict = infer_full_entanglement(12, results)
    assert verdict.status == "Inconclusive"
    assert canonical(verdict.hypotheses) == {
        frozenset((frozenset(range(3, 10)), frozenset(range(10, 15))))
    }
    assert verdict.suggestions[0].chain == (8, 9, 10, 11)
    assert verdict.suggestions[0].subset == (0, 1)

    aux = NegativityEstimate(0.3, 0.01, 0.25, 0.35, (8, 9, 10, 11), "pt-test")
    flipped = infer_full_entanglement(12, results, aux=[aux])
    assert flipped.status == "FullyEntangled"
    assert flipped.aux_consumed == 1


def test_inference_fourteen_qubit_block():
    order = list(range(2, 16))
    results = ring_results(order, [(9, 10), (11, 12)])
    verdict = infer_full_entanglement(14, results)
    assert verdict.status == "Inconclusive"
    rest = frozenset(set(order) - {10, 11})
    assert canonical(verdict.hypotheses) == {
        frozenset((frozenset({10, 11}), rest))
    }
    aux = NegativityEstimate(0.3, 0.01, 0.25, 0.35, (10, 11, 9, 12), "pt-test")
    assert infer_full_entanglement(14, results, aux=[aux]).status == "FullyEntangled"


def test_inference_insignificant_aux_changes_nothing():
    order = list(range(3, 15))
    results = ring_results(order, [(9, 10), (14, 3)])
    aux = NegativityEstimate(0.05, 0.03, -0.02, 0.12, (8, 9, 10, 11), "pt-test")
    verdict = infer_full_entanglement(12, results, aux=[aux])
    assert verdict.status == "Inconclusive"
    assert verdict.aux_consumed == 1


def test_inference_requires_every_edge():
    order = list(range(8))
    results = ring_results(order)
    with pytest.raises(ValueError):
        infer_full_entanglement(8, results[:-1])
    broken = results[:-1] + [((0, 4), make_estimate((0, 4), 0.4, True))]
    with pytest.raises(ValueError):
        infer_full_entanglement(8, broken)


def test_inference_monotone_in_significance():
    order = list(range(3, 15))
    weak = [(9, 10), (14, 3), (5, 6), (7, 8)]
    before = infer_full_entanglement(12, ring_results(order, weak))
    after = infer_full_entanglement(12, ring_results(order, weak[:-1]))
    assert len(before.hypotheses) == 7
    assert len(after.hypotheses) == 3
    assert canonical(after.hypotheses) <= canonical(before.hypotheses)


def test_verdict_shape_matches_status():
    with pytest.raises(ValueError):
        EntanglementVerdict("FullyEntangled", (SeparationHypothesis((1,), (2,)),))
    with pytest.raises(ValueError):
        EntanglementVerdict("Inconclusive", ())


def test_fidelity_and_trace_distance():
    rng = np.random.default_rng(23)
    rho = random_density(rng, 4)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-12)
    a = np.array([1, 0, 0, 0], dtype=complex)
    b = np.array([1, 1, 0, 0], dtype=complex) / np.sqrt(2)
    fa, fb = np.outer(a, a.conj()), np.outer(b, b.conj())
    assert fidelity(fa, fb) == pytest.approx(0.5, abs=1e-9)
    assert fidelity(BELL, np.eye(4) / 4) == pytest.approx(0.25, abs=1e-9)
    assert trace_distance(BELL, np.eye(4) / 4) == pytest.approx(0.75, abs=1e-9)


def test_fidelity_upper_bound_over_chains():
    spec = GraphStateSpec(ring_graph(8))
    chains = [tuple((i + k) % 8 for k in range(4)) for i in range(8)]
    recs = [
        ReconstructedState(
            rho=reduced_density_matrix(spec.graph, c),
            raw=reduced_density_matrix(spec.graph, c).matrix,
            subsystem=c,
            retained=1.0,
        )
        for c in chains
    ]
    assert fidelity_upper_bound(recs, spec) == pytest.approx(1.0, abs=1e-6)

    worst = reduced_density_matrix(spec.graph, chains[3]).matrix
    degraded = DensityMatrix(0.8 * worst + 0.2 * np.eye(16) / 16)
    recs[3] = ReconstructedState(
        rho=degraded, raw=degraded.matrix, subsystem=chains[3], retained=1.0
    )
    bound = fidelity_upper_bound(recs, spec)
    assert bound == pytest.approx(fidelity(degraded, worst), abs=1e-9)
    assert bound < 0.97

    with pytest.raises(ValueError):
        fidelity_upper_bound(recs[:-1], spec)


def test_thread_limit_env(monkeypatch):
    monkeypatch.setenv("ENTVERIFY_THREADS", "3")
    assert thread_limit() == 3
    monkeypatch.setenv("ENTVERIFY_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_limit()
    monkeypatch.setenv("ENTVERIFY_THREADS", "0")
    with pytest.raises(ValueError):
        thread_limit()
    monkeypatch.delenv("ENTVERIFY_THREADS")
    assert thread_limit() >= 1
