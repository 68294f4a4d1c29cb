import numpy as np

from entverify.circuits import Circuit, Gate, synthesize
from entverify.graphs import GraphStateSpec
from entverify.sim import dense_outcome_probabilities
from entverify.tomography import (
    SettingBlock,
    TomographyDataset,
    basis_change_gates,
    enumerate_settings,
)


def exact_chain_dataset(graph, subsystem):
    """Infinite-statistics dataset for an identity-layout graph state: each
    setting's rows carry the exact outcome distribution as weights."""
    spec = GraphStateSpec(graph)
    n = graph.n
    prep = synthesize(spec).gates
    blocks = {}
    for setting in enumerate_settings():
        gates = list(prep)
        for basis, q in zip(setting, subsystem):
            gates += basis_change_gates(basis, q)
        gates += [Gate("MeasureZ", (q,)) for q in range(n)]
        probs = dense_outcome_probabilities(Circuit(n, tuple(gates)))
        rows = np.array([[int(c) for c in key] for key in probs], dtype=np.uint8)
        weights = np.array(list(probs.values()), dtype=np.float64)
        blocks[setting] = SettingBlock(rows.reshape(len(probs), n), weights)
    return TomographyDataset(tuple(range(n)), tuple(subsystem), blocks)


def sampled_chain_dataset(spec, subsystem, shots, rng, noise=None, device=None):
    """Simulate every tomography setting and bundle the counts records."""
    from entverify.sim import sample_shots
    from entverify.tomography import chain_plans

    records = []
    for plan in chain_plans(spec, subsystem, device=device):
        result = sample_shots(plan.circuit, shots, rng, noise=noise)
        records.append(
            {
                "setting": list(plan.bases),
                "qubits": list(result.qubits),
                "shots": shots,
                "counts": result.counts,
                "subsystem": list(plan.subsystem),
            }
        )
    return TomographyDataset.from_records(records)


def random_clifford_circuit(rng, n, m, measure=None):
    """Seeded random circuit; measure=None for none, 'all', or qubit list."""
    kinds_1q = ["H", "S", "Sdg", "X", "Z"]
    gates = []
    for _ in range(m):
        if n >= 2 and rng.random() < 0.4:
            pair = rng.choice(n, size=2, replace=False)
            gates.append(Gate(rng.choice(["CZ", "CNOT"]), tuple(int(q) for q in pair)))
        else:
            gates.append(Gate(rng.choice(kinds_1q), (int(rng.integers(n)),)))
    if measure == "all":
        measure = range(n)
    for q in measure or ():
        gates.append(Gate("MeasureZ", (int(q),)))
    return Circuit(n, tuple(gates))


def norm_counts(counts):
    total = sum(counts.values())
    return {k: v / total for k, v in counts.items()}


def tvd(p, q):
    """Total variation distance between two distributions given as dicts."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
