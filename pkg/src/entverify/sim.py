"""Stabilizer-tableau simulation of measurement circuits.

Signs are tracked as bit masks over "coins" (the random bits minted by
measurements with unconstrained outcomes), so a single symbolic pass yields
every measurement outcome as an affine function of the coins.  Shot sampling
is then a GF(2) matrix product, and Pauli noise rides along as per-shot
frames propagated through the remaining gates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, DeviceModel, Gate

MAX_COINS = 62


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing-style gate errors plus independent readout flips."""

    error_1q: float = 0.0
    error_2q: float = 0.0
    readout_error: float = 0.0

    def __post_init__(self):
        for p in (self.error_1q, self.error_2q, self.readout_error):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"error probability {p} outside [0, 1]")

    @property
    def is_trivial(self) -> bool:
        return self.error_1q == self.error_2q == self.readout_error == 0.0

    @classmethod
    def from_device(cls, device: DeviceModel) -> "NoiseModel":
        return cls(device.error_1q, device.error_2q, device.readout_error)

    def scaled(self, factor: float) -> "NoiseModel":
        return NoiseModel(
            min(1.0, self.error_1q * factor),
            min(1.0, self.error_2q * factor),
            min(1.0, self.readout_error * factor),
        )


class StabilizerTableau:
    """Destabilizer/stabilizer tableau with symbolic signs.

    Row i < n is the i-th destabilizer, row n+i the i-th stabilizer; row 2n
    is scratch.  ``r[i]`` is a bit mask: bit 0 is the constant sign, bit 1+j
    flags dependence on coin j.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("tableau needs at least one qubit")
        self.n = n
        self.x = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.z = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.r = np.zeros(2 * n + 1, dtype=np.uint64)
        self.x[np.arange(n), np.arange(n)] = 1
        self.z[n + np.arange(n), np.arange(n)] = 1
        self.n_coins = 0

    def copy(self) -> "StabilizerTableau":
        out = StabilizerTableau(self.n)
        out.x = self.x.copy()
        out.z = self.z.copy()
        out.r = self.r.copy()
        out.n_coins = self.n_coins
        return out

    def apply_gate(self, kind: str, qubits: tuple[int, ...]) -> None:
        x, z = self.x, self.z
        if kind == "H":
            (q,) = qubits
            self.r ^= (x[:, q] & z[:, q]).astype(np.uint64)
            x[:, q], z[:, q] = z[:, q].copy(), x[:, q].copy()
        elif kind == "S":
            (q,) = qubits
            self.r ^= (x[:, q] & z[:, q]).astype(np.uint64)
            z[:, q] ^= x[:, q]
        elif kind == "Sdg":
            (q,) = qubits
            self.r ^= (x[:, q] & (z[:, q] ^ 1)).astype(np.uint64)
            z[:, q] ^= x[:, q]
        elif kind == "X":
            (q,) = qubits
            self.r ^= z[:, q].astype(np.uint64)
        elif kind == "Z":
            (q,) = qubits
            self.r ^= x[:, q].astype(np.uint64)
        elif kind == "CNOT":
            c, t = qubits
            self.r ^= (x[:, c] & z[:, t] & (x[:, t] ^ z[:, c] ^ 1)).astype(np.uint64)
            x[:, t] ^= x[:, c]
            z[:, c] ^= z[:, t]
        elif kind == "CZ":
            a, b = qubits
            self.r ^= (x[:, a] & x[:, b] & (z[:, a] ^ z[:, b])).astype(np.uint64)
            z[:, a] ^= x[:, b]
            z[:, b] ^= x[:, a]
        elif kind == "MeasureZ":
            raise ValueError("use measure_z for measurements")
        else:
            raise ValueError(f"unknown gate kind {kind!r}")

    def _rowsum(self, h: int, i: int) -> None:
        """Row h <- row h * row i (phase-tracked Pauli product).

        Rows h and i must commute, which holds whenever both carry stabilizer
        group elements; the phase sum is then even and the sign update is
        linear over the coin masks.
        """
        x1 = self.x[i].astype(np.int64)
        z1 = self.z[i].astype(np.int64)
        x2 = self.x[h].astype(np.int64)
        z2 = self.z[h].astype(np.int64)
        g = (
            x1 * z1 * (z2 - x2)
            + x1 * (1 - z1) * (z2 * (2 * x2 - 1))
            + (1 - x1) * z1 * (x2 * (1 - 2 * z2))
        )
        total = int(g.sum()) % 4
        if total % 2:
            raise AssertionError("odd phase sum: rows anticommute")
        self.r[h] ^= self.r[i] ^ np.uint64(total // 2)
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def _rowsum_bits(self, h: int, i: int) -> None:
        """Bit-only product for destabilizer rows, whose phases are never read
        (they may anticommute with the pivot, making the phase imaginary)."""
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure_z(self, q: int) -> int:
        """Measure Z on qubit q; the outcome is returned as a coin mask."""
        n = self.n
        pivots = np.flatnonzero(self.x[n : 2 * n, q])
        if pivots.size:
            p = n + int(pivots[0])
            for i in range(2 * n):
                if i != p and self.x[i, q]:
                    if i < n:
                        self._rowsum_bits(i, p)
                    else:
                        self._rowsum(i, p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            if self.n_coins >= MAX_COINS:
                raise ValueError("too many random measurement outcomes")
            mask = np.uint64(1) << np.uint64(1 + self.n_coins)
            self.n_coins += 1
            self.r[p] = mask
            return int(mask)
        scratch = 2 * n
        self.x[scratch] = 0
        self.z[scratch] = 0
        self.r[scratch] = 0
        for i in range(n):
            if self.x[i, q]:
                self._rowsum(scratch, n + i)
        return int(self.r[scratch])

    def stabilizer_rows(self) -> list[tuple[str, int]]:
        """Stabilizer generators as (ops text, sign mask) pairs."""
        out = []
        for i in range(self.n, 2 * self.n):
            ops = "".join(
                "IXZY"[int(self.x[i, q]) + 2 * int(self.z[i, q])] for q in range(self.n)
            )
            out.append((ops, int(self.r[i])))
        return out


@dataclass(frozen=True)
class MeasurementMap:
    """Affine map from coins to measurement outcomes: out = const ^ coef@coins."""

    qubits: tuple[int, ...]
    const: np.ndarray  # (k,) uint8
    coef: np.ndarray  # (k, n_coins) uint8
    n_coins: int


def affine_outcome_map(circuit: Circuit) -> MeasurementMap:
    """One symbolic pass extracting every MeasureZ outcome's coin dependence."""
    tab = StabilizerTableau(circuit.n_qubits)
    qubits: list[int] = []
    masks: list[int] = []
    for g in circuit.gates:
        if g.kind == "MeasureZ":
            masks.append(tab.measure_z(g.qubits[0]))
            qubits.append(g.qubits[0])
        else:
            tab.apply_gate(g.kind, g.qubits)
    k, m = len(masks), tab.n_coins
    const = np.array([mask & 1 for mask in masks], dtype=np.uint8).reshape(k)
    coef = np.zeros((k, m), dtype=np.uint8)
    for row, mask in enumerate(masks):
        for j in range(m):
            coef[row, j] = (mask >> (1 + j)) & 1
    return MeasurementMap(tuple(qubits), const, coef, m)


def _frame_transform(kind, qubits, fx, fz):
    if kind == "H":
        q = qubits[0]
        tmp = fx[:, q].copy()
        fx[:, q] = fz[:, q]
        fz[:, q] = tmp
    elif kind in ("S", "Sdg"):
        q = qubits[0]
        fz[:, q] ^= fx[:, q]
    elif kind == "CNOT":
        c, t = qubits
        fx[:, t] ^= fx[:, c]
        fz[:, c] ^= fz[:, t]
    elif kind == "CZ":
        a, b = qubits
        fz[:, a] ^= fx[:, b]
        fz[:, b] ^= fx[:, a]
    # X and Z leave frames unchanged (phases don't affect outcomes)


def inject_pauli_noise(tab: StabilizerTableau, qubits, rng, p: float) -> None:
    """Single-shot error injection used by the slow reference sampler."""
    if p <= 0.0 or rng.random() >= p:
        return
    if len(qubits) == 1:
        codes = [int(rng.integers(1, 4))]
    else:
        idx = int(rng.integers(1, 16))
        codes = [idx >> 2, idx & 3]
    for q, code in zip(qubits, codes):
        if code in (1, 2):
            tab.apply_gate("X", (q,))
        if code in (2, 3):
            tab.apply_gate("Z", (q,))


@dataclass(frozen=True)
class SampleResult:
    qubits: tuple[int, ...]
    shots: int
    counts: dict[str, int]


def _counts_from_rows(rows: np.ndarray) -> dict[str, int]:
    uniq, cnt = np.unique(rows, axis=0, return_counts=True)
    return {
        "".join("1" if b else "0" for b in row): int(c) for row, c in zip(uniq, cnt)
    }


def sample_shots(
    circuit: Circuit,
    shots: int,
    rng: np.random.Generator,
    noise: NoiseModel | None = None,
) -> SampleResult:
    """Sample measurement records. Draw order is fixed: coins first, then one
    occurrence + one choice block per noisy gate in circuit order, then
    readout flips, so results are reproducible for a given seed and config."""
    if shots < 1:
        raise ValueError("shots must be positive")
    amap = affine_outcome_map(circuit)
    k = len(amap.qubits)
    if k == 0:
        raise ValueError("circuit has no measurements")
    coins = rng.integers(0, 2, size=(shots, amap.n_coins), dtype=np.uint8)
    outs = (coins @ amap.coef.T.astype(np.uint8)) % 2
    outs ^= amap.const[None, :]
    if noise is not None and not noise.is_trivial:
        outs ^= _frame_flips(circuit, amap, shots, rng, noise)
        if noise.readout_error > 0.0:
            flips = rng.random((shots, k)) < noise.readout_error
            outs ^= flips.astype(np.uint8)
    return SampleResult(amap.qubits, shots, _counts_from_rows(outs))


def _frame_flips(circuit, amap, shots, rng, noise) -> np.ndarray:
    n = circuit.n_qubits
    fx = np.zeros((shots, n), dtype=np.uint8)
    fz = np.zeros((shots, n), dtype=np.uint8)
    flips = np.zeros((shots, len(amap.qubits)), dtype=np.uint8)
    ki = 0
    for g in circuit.gates:
        if g.kind == "MeasureZ":
            flips[:, ki] = fx[:, g.qubits[0]]
            ki += 1
            continue
        _frame_transform(g.kind, g.qubits, fx, fz)
        p = noise.error_2q if len(g.qubits) == 2 else noise.error_1q
        if p <= 0.0:
            continue
        occ = rng.random(shots) < p
        if len(g.qubits) == 1:
            code = rng.integers(1, 4, size=shots).astype(np.uint8)
            q = g.qubits[0]
            fx[:, q] ^= occ & (code != 3)
            fz[:, q] ^= occ & (code != 1)
        else:
            idx = rng.integers(1, 16, size=shots).astype(np.uint8)
            for q, code in zip(g.qubits, (idx >> 2, idx & 3)):
                fx[:, q] ^= occ & ((code == 1) | (code == 2))
                fz[:, q] ^= occ & ((code == 2) | (code == 3))
    return flips


def reference_sample_shots(
    circuit: Circuit,
    shots: int,
    rng: np.random.Generator,
    noise: NoiseModel | None = None,
) -> SampleResult:
    """Slow per-shot sampler: fresh tableau per shot, errors injected as real
    gates. Distributionally identical to sample_shots; kept as a cross-check."""
    rows = []
    meas_qubits: tuple[int, ...] | None = None
    for _ in range(shots):
        tab = StabilizerTableau(circuit.n_qubits)
        coin_values: list[int] = []
        qubits: list[int] = []
        bits: list[int] = []
        for g in circuit.gates:
            if g.kind == "MeasureZ":
                before = tab.n_coins
                mask = tab.measure_z(g.qubits[0])
                if tab.n_coins > before:
                    coin_values.append(int(rng.integers(0, 2)))
                val = mask & 1
                for j, cv in enumerate(coin_values):
                    val ^= cv * ((mask >> (1 + j)) & 1)
                qubits.append(g.qubits[0])
                bits.append(val)
                continue
            tab.apply_gate(g.kind, g.qubits)
            if noise is not None:
                p = noise.error_2q if len(g.qubits) == 2 else noise.error_1q
                inject_pauli_noise(tab, g.qubits, rng, p)
        if noise is not None and noise.readout_error > 0.0:
            bits = [b ^ int(rng.random() < noise.readout_error) for b in bits]
        rows.append(bits)
        meas_qubits = tuple(qubits)
    if meas_qubits is None or not meas_qubits:
        raise ValueError("circuit has no measurements")
    arr = np.array(rows, dtype=np.uint8)
    return SampleResult(meas_qubits, shots, _counts_from_rows(arr))


def exhaustive_outcome_probabilities(circuit: Circuit) -> dict[str, float]:
    """Exact noiseless outcome distribution from the affine outcome map,
    obtained by enumerating every coin assignment."""
    amap = affine_outcome_map(circuit)
    m = amap.n_coins
    if m > 20:
        raise ValueError(f"too many coins to enumerate ({m})")
    assignments = np.arange(2**m, dtype=np.uint32)
    coins = ((assignments[:, None] >> np.arange(m)[None, :]) & 1).astype(np.uint8)
    outs = ((coins @ amap.coef.T.astype(np.uint8)) % 2) ^ amap.const[None, :]
    uniq, cnt = np.unique(outs, axis=0, return_counts=True)
    w = 1.0 / 2**m
    return {
        "".join("1" if b else "0" for b in row): float(c) * w
        for row, c in zip(uniq, cnt)
    }


def dense_outcome_probabilities(circuit: Circuit) -> dict[str, float]:
    """Exact noiseless outcome distribution via a dense statevector run;
    an independent check on the tableau machinery (small circuits only)."""
    from .statevector import run_dense

    measured: list[int] = []
    ops: list[Gate] = []
    for g in circuit.gates:
        if g.kind == "MeasureZ":
            measured.append(g.qubits[0])
        else:
            if any(q in measured for q in g.qubits):
                raise ValueError("gate after measurement is not supported here")
            ops.append(g)
    if not measured:
        raise ValueError("circuit has no measurements")
    psi = run_dense(Circuit(circuit.n_qubits, tuple(ops)))
    n = circuit.n_qubits
    probs = np.abs(psi.reshape((2,) * n)) ** 2
    keep = set(measured)
    probs = probs.sum(axis=tuple(q for q in range(n) if q not in keep))
    remaining = sorted(keep)
    order = [remaining.index(q) for q in measured]
    probs = probs.transpose(order).reshape(-1)
    k = len(measured)
    out = {}
    for idx in np.flatnonzero(probs > 1e-15):
        key = format(int(idx), f"0{k}b")
        out[key] = float(probs[idx])
    return out
