"""Four-qubit subsystem tomography: measurement planning, counts handling,
linear inversion with shot-weighted pooling, and projection onto physical
states via eigenvalue truncation.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, DeviceModel, Gate, lower, optimize, schedule, synthesize
from .errors import DegenerateDataError, IncompleteDataError
from .graphs import GraphStateSpec
from .pauli import DensityMatrix, PauliString, pauli_to_matrix
from .tolerances import TOL

BASES = ("X", "Y", "Z")
SUBSYSTEM_SIZE = 4
LOW_RETENTION = 100

# Gates rotating the named Pauli eigenbasis onto the computational basis.
_BASIS_CHANGE = {"X": ("H",), "Y": ("Sdg", "H"), "Z": ()}


def enumerate_settings() -> list[str]:
    """All 81 subsystem measurement settings, lexicographic in X < Y < Z."""
    return ["".join(p) for p in itertools.product(BASES, repeat=SUBSYSTEM_SIZE)]


def basis_change_gates(basis: str, qubit: int) -> list[Gate]:
    if basis not in _BASIS_CHANGE:
        raise ValueError(f"unknown basis {basis!r}")
    return [Gate(kind, (qubit,)) for kind in _BASIS_CHANGE[basis]]


@dataclass(frozen=True)
class PlannedSetting:
    """One measurement circuit: state prep, basis rotations, full readout."""

    setting: str  # four basis letters, one per subsystem qubit
    subsystem: tuple[int, ...]
    qubits: tuple[int, ...]  # measured qubits, in readout order
    bases: tuple[str, ...]  # basis letter per measured qubit
    circuit: Circuit


def chain_plans(
    spec: GraphStateSpec,
    subsystem: tuple[int, ...],
    device: DeviceModel | None = None,
) -> list[PlannedSetting]:
    """Measurement plan covering all 81 settings for one 4-qubit subsystem."""
    subsystem = tuple(int(q) for q in subsystem)
    if len(subsystem) != SUBSYSTEM_SIZE or len(set(subsystem)) != SUBSYSTEM_SIZE:
        raise ValueError("subsystem must be four distinct qubits")
    for q in subsystem:
        if q not in spec.qubit_map:
            raise ValueError(f"qubit {q} is not part of the prepared state")
    if device is None:
        prep = synthesize(spec)
    else:
        prep = schedule(optimize(lower(optimize(synthesize(spec)), device)))
    measured = tuple(range(prep.n_qubits))
    plans = []
    for setting in enumerate_settings():
        gates = list(prep.gates)
        for basis, q in zip(setting, subsystem):
            gates += basis_change_gates(basis, q)
        gates += [Gate("MeasureZ", (q,)) for q in measured]
        bases = tuple(
            setting[subsystem.index(q)] if q in subsystem else "Z" for q in measured
        )
        plans.append(
            PlannedSetting(
                setting=setting,
                subsystem=subsystem,
                qubits=measured,
                bases=bases,
                circuit=Circuit(prep.n_qubits, tuple(gates)),
            )
        )
    return plans


@dataclass(frozen=True)
class SettingBlock:
    """Outcome rows for one setting: bits is (m, n_qubits), weights is (m,)."""

    bits: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(np.asarray(self.bits, dtype=np.uint8))
        weights = np.asarray(self.weights, dtype=np.float64)
        if bits.ndim != 2 or weights.ndim != 1 or bits.shape[0] != weights.shape[0]:
            raise ValueError("bits must be (m, n) with one weight per row")
        if bits.size and bits.max() > 1:
            raise ValueError("bits must be 0/1")
        if weights.size and weights.min() < 0:
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_sign_cache", {})

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def sign_matrix(self, cols: tuple[int, ...]) -> np.ndarray:
        """Row signs for every Pauli support over the given columns: entry
        (r, m) is (-1)^(parity of row r on the columns picked by mask m).
        Cached; resampled blocks share it since their rows are unchanged."""
        cached = self._sign_cache.get(cols)
        if cached is None:
            sub = self.bits[:, list(cols)].astype(np.float64)
            masks = np.array(
                [[(m >> i) & 1 for i in range(len(cols))] for m in range(2 ** len(cols))],
                dtype=np.float64,
            )
            cached = 1.0 - 2.0 * ((sub @ masks.T) % 2)
            self._sign_cache[cols] = cached
        return cached


def _merged_block(bits: np.ndarray, weights: np.ndarray) -> SettingBlock:
    if bits.shape[0] == 0:
        return SettingBlock(bits, weights)
    uniq, inverse = np.unique(bits, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0], dtype=np.float64)
    np.add.at(merged, inverse, weights)
    return SettingBlock(uniq, merged)


@dataclass(frozen=True)
class TomographyDataset:
    """Measurement records for one subsystem, grouped by setting."""

    qubits: tuple[int, ...]
    subsystem: tuple[int, ...]
    blocks: dict[str, SettingBlock]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "subsystem", tuple(int(q) for q in self.subsystem))
        if len(self.subsystem) != SUBSYSTEM_SIZE:
            raise ValueError("subsystem must have four qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("duplicate qubits")
        missing = [q for q in self.subsystem if q not in self.qubits]
        if missing:
            raise ValueError(f"subsystem qubits {missing} not measured")
        nq = len(self.qubits)
        for key, block in self.blocks.items():
            if len(key) != SUBSYSTEM_SIZE or any(ch not in BASES for ch in key):
                raise ValueError(f"bad setting key {key!r}")
            if block.bits.shape[1] != nq:
                raise ValueError(f"setting {key}: rows have wrong width")

    def column(self, qubit: int) -> int:
        return self.qubits.index(qubit)

    @property
    def settings(self) -> list[str]:
        return sorted(self.blocks)

    def shots(self, setting: str) -> float:
        return self.blocks[setting].total

    @classmethod
    def from_records(
        cls, records, subsystem=None, strict_shots: bool = True
    ) -> "TomographyDataset":
        """Group raw counts records; all records must share the readout layout
        and subsystem, and non-subsystem qubits must be read in the Z basis.

        With strict_shots=False a counts/shots mismatch only warns and the
        actual totals are used."""
        grouped: dict[str, tuple[list, list]] = {}
        qubits = None
        for rec in records:
            rec_qubits = tuple(int(q) for q in rec["qubits"])
            rec_sub = tuple(int(q) for q in rec["subsystem"])
            if qubits is None:
                qubits = rec_qubits
                if subsystem is None:
                    subsystem = rec_sub
                subsystem = tuple(int(q) for q in subsystem)
            if rec_qubits != qubits:
                raise ValueError("records disagree on measured qubit order")
            if rec_sub != subsystem:
                raise ValueError("records disagree on the subsystem")
            setting = list(rec["setting"])
            if len(setting) != len(qubits):
                raise ValueError("setting must list one basis per measured qubit")
            for pos, basis in enumerate(setting):
                if basis not in BASES:
                    raise ValueError(f"unknown basis {basis!r}")
                if qubits[pos] not in subsystem and basis != "Z":
                    raise ValueError("non-subsystem qubits must be read in Z")
            key = "".join(setting[qubits.index(q)] for q in subsystem)
            rows, weights = grouped.setdefault(key, ([], []))
            total = 0
            for bitstring, count in rec["counts"].items():
                if len(bitstring) != len(qubits) or set(bitstring) - {"0", "1"}:
                    raise ValueError(f"bad outcome key {bitstring!r}")
                if int(count) < 0:
                    raise ValueError("negative count")
                rows.append([int(ch) for ch in bitstring])
                weights.append(float(count))
                total += int(count)
            if total != int(rec["shots"]):
                if strict_shots:
                    raise ValueError("counts do not sum to the declared shots")
                warnings.warn(
                    f"counts sum to {total}, not the declared {rec['shots']}; "
                    "keeping the actual totals",
                    stacklevel=2,
                )
        if qubits is None:
            raise ValueError("no records given")
        blocks = {
            key: _merged_block(
                np.array(rows, dtype=np.uint8).reshape(len(rows), len(qubits)),
                np.array(weights, dtype=np.float64),
            )
            for key, (rows, weights) in grouped.items()
        }
        return cls(qubits, subsystem, blocks)

    def marginalize(self, keep: tuple[int, ...]) -> "TomographyDataset":
        """Restrict rows to the given qubit columns, merging duplicates."""
        keep = tuple(int(q) for q in keep)
        for q in self.subsystem:
            if q not in keep:
                raise ValueError("cannot drop subsystem qubits")
        cols = [self.column(q) for q in keep]
        blocks = {
            key: _merged_block(block.bits[:, cols], block.weights)
            for key, block in self.blocks.items()
        }
        return TomographyDataset(keep, self.subsystem, blocks)

    def postselect(
        self, conditions: dict[int, int], warn: bool = True
    ) -> "TomographyDataset":
        """Keep rows whose listed qubits came out with the given bit values."""
        if not conditions:
            return self
        cols = {self.column(int(q)): int(v) for q, v in conditions.items()}
        for q in conditions:
            if int(q) in self.subsystem:
                raise ValueError("cannot postselect on a subsystem qubit")
        for v in cols.values():
            if v not in (0, 1):
                raise ValueError("condition values must be 0 or 1")
        blocks = {}
        for key, block in self.blocks.items():
            mask = np.ones(block.bits.shape[0], dtype=bool)
            for col, val in cols.items():
                mask &= block.bits[:, col] == val
            kept = SettingBlock(block.bits[mask], block.weights[mask])
            for cols, signs in block._sign_cache.items():
                kept._sign_cache[cols] = signs[mask]
            if kept.total <= 0:
                raise DegenerateDataError(
                    f"postselection removed every outcome in setting {key}"
                )
            if warn and kept.total < LOW_RETENTION:
                warnings.warn(
                    f"setting {key}: only {kept.total:.6g} outcomes survive "
                    "postselection",
                    stacklevel=2,
                )
            blocks[key] = kept
        return TomographyDataset(self.qubits, self.subsystem, blocks)

    def resample(self, rng: np.random.Generator) -> "TomographyDataset":
        """Multinomial resample of each setting's rows (bootstrap step)."""
        blocks = {}
        for key, block in self.blocks.items():
            if np.abs(block.weights - np.round(block.weights)).max() > 1e-9:
                raise ValueError("resampling needs integer counts")
            total = block.total
            n = int(round(total))
            if n <= 0:
                raise ValueError("resampling needs a positive total")
            new = rng.multinomial(n, block.weights / total).astype(np.float64)
            fresh = SettingBlock(block.bits, new)
            object.__setattr__(fresh, "_sign_cache", block._sign_cache)
            blocks[key] = fresh
        return TomographyDataset(self.qubits, self.subsystem, blocks)

    def retained(self) -> float:
        """Smallest per-setting total weight (post-filter sample size)."""
        return min(block.total for block in self.blocks.values())


def write_counts_jsonl(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


_RECORD_KEYS = {"setting", "qubits", "shots", "counts", "subsystem"}


def read_counts_jsonl(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise ValueError(f"line {line_no}: record must be an object")
            missing = _RECORD_KEYS - set(rec)
            if missing:
                raise ValueError(f"line {line_no}: missing keys {sorted(missing)}")
            records.append(rec)
    if not records:
        raise ValueError(f"{path}: no records")
    return records


def _pauli_expectation(dataset: TomographyDataset, ops: str) -> float:
    """Pooled estimate of one subsystem Pauli, weighted by retained shots."""
    support = [i for i, ch in enumerate(ops) if ch != "I"]
    if not support:
        return 1.0
    num = 0.0
    den = 0.0
    cols = [dataset.column(q) for q in dataset.subsystem]
    for setting, block in dataset.blocks.items():
        if any(setting[i] != ops[i] for i in support):
            continue
        parity = np.zeros(block.bits.shape[0], dtype=np.uint8)
        for i in support:
            parity ^= block.bits[:, cols[i]]
        signs = 1.0 - 2.0 * parity.astype(np.float64)
        num += float(signs @ block.weights)
        den += block.total
    if den <= 0:
        raise IncompleteDataError(f"no setting measures {ops}")
    return num / den


def _all_pauli_ops() -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=SUBSYSTEM_SIZE)]


_INVERSION_CACHE: dict = {}


def _inversion_tables():
    """Static pooling structure: which settings feed which Pauli op, the
    support mask of each op, and the stacked Pauli matrices."""
    if _INVERSION_CACHE:
        return _INVERSION_CACHE["tables"]
    ops = _all_pauli_ops()
    settings = enumerate_settings()
    flat_p, flat_s, flat_m = [], [], []
    for p, op in enumerate(ops):
        support = [i for i, ch in enumerate(op) if ch != "I"]
        mask = sum(1 << i for i in support)
        for s, setting in enumerate(settings):
            if all(setting[i] == op[i] for i in support):
                flat_p.append(p)
                flat_s.append(s)
                flat_m.append(mask)
    stack = np.stack([pauli_to_matrix(PauliString(op)) for op in ops])
    tables = (
        np.array(flat_p),
        np.array(flat_s),
        np.array(flat_m),
        settings,
        stack,
    )
    _INVERSION_CACHE["tables"] = tables
    return tables


def linear_inversion(dataset: TomographyDataset) -> np.ndarray:
    """Direct inversion estimate; Hermitian and unit trace, possibly not PSD."""
    missing = sorted(set(enumerate_settings()) - set(dataset.blocks))
    if missing:
        raise IncompleteDataError(
            f"{len(missing)} of 81 settings missing (first: {missing[:3]})"
        )
    flat_p, flat_s, flat_m, settings, stack = _inversion_tables()
    cols = tuple(dataset.column(q) for q in dataset.subsystem)
    n_masks = 2**SUBSYSTEM_SIZE
    raw = np.empty((len(settings), n_masks))
    totals = np.empty(len(settings))
    for s, key in enumerate(settings):
        block = dataset.blocks[key]
        raw[s] = block.weights @ block.sign_matrix(cols)
        totals[s] = block.weights.sum()
    num = np.bincount(flat_p, weights=raw[flat_s, flat_m], minlength=len(stack))
    den = np.bincount(flat_p, weights=totals[flat_s], minlength=len(stack))
    if den.min() <= 0:
        raise IncompleteDataError("a pooled setting group carries no shots")
    return np.tensordot(num / den, stack, axes=1) / 2**SUBSYSTEM_SIZE


def project_to_physical(eigenvalues: np.ndarray) -> np.ndarray:
    """Closest probability vector (in least squares) to the given spectrum.

    Walks the eigenvalues from smallest to largest, zeroing any that would
    stay negative and spreading the removed mass over the rest.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=np.float64))[::-1]
    out = lam.copy()
    acc = 0.0
    for i in range(len(lam) - 1, -1, -1):
        if out[i] + acc / (i + 1) < 0:
            acc += out[i]
            out[i] = 0.0
        else:
            out[: i + 1] += acc / (i + 1)
            break
    return out


def mle_project(matrix: np.ndarray) -> DensityMatrix:
    """Project a Hermitian unit-trace estimate onto the physical state set."""
    mat = np.asarray(matrix, dtype=complex)
    herm = (mat + mat.conj().T) / 2.0
    if not np.allclose(mat, herm, atol=TOL.mle_trace):
        raise ValueError("estimate is not Hermitian")
    if abs(np.trace(herm).real - 1.0) > TOL.mle_trace:
        raise ValueError("estimate trace is not 1")
    w, v = np.linalg.eigh(herm)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    fixed = project_to_physical(w)
    fixed = np.clip(fixed, 0.0, None)
    fixed /= fixed.sum()
    rho = (v * fixed) @ v.conj().T
    rho = (rho + rho.conj().T) / 2.0
    return DensityMatrix(rho)


@dataclass(frozen=True)
class ReconstructedState:
    rho: DensityMatrix
    raw: np.ndarray
    subsystem: tuple[int, ...]
    retained: float  # smallest per-setting weight that fed the estimate


def reconstruct(dataset: TomographyDataset, project: bool = True) -> ReconstructedState:
    raw = linear_inversion(dataset)
    rho = mle_project(raw) if project else DensityMatrix(raw)
    return ReconstructedState(
        rho=rho,
        raw=raw,
        subsystem=dataset.subsystem,
        retained=dataset.retained(),
    )
