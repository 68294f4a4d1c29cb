"""End-to-end orchestration: configure a ring experiment, simulate tomography
counts, reconstruct chain states, and write a deterministic report bundle.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from .analysis import (
    EntanglementVerdict,
    NegativityEstimate,
    bootstrap,
    dist2_negativity,
    dist3_negativity,
    fidelity_upper_bound,
    infer_full_entanglement,
    nn_filter_negativity,
)
from .circuits import Circuit, DeviceModel, get_device, lower, optimize, schedule, synthesize
from .errors import ConfigError
from .graphs import GraphStateSpec, ring_spec
from .sim import NoiseModel, sample_shots
from .tomography import (
    TomographyDataset,
    chain_plans,
    read_counts_jsonl,
    reconstruct,
    write_counts_jsonl,
)

_CONFIG_FIELDS = (
    "n",
    "qubit_map",
    "device",
    "error_1q",
    "error_2q",
    "readout",
    "shots",
    "resamples",
    "seed",
    "out",
)

ANALYZE_MODES = ("nn", "dist2", "dist3", "verdict", "fidelity")

# spawn-key namespaces, so streams stay stable if steps are reordered
_NS_SAMPLE = 0
_NS_BOOTSTRAP = 1


@dataclass(frozen=True)
class PipelineConfig:
    n: int = 8
    qubit_map: tuple[int, ...] | None = None
    device: str = "ibmqx5"
    error_1q: float | None = None  # None keeps the device's rate
    error_2q: float | None = None
    readout: float | None = None
    shots: int = 2048
    resamples: int = 1000
    seed: int = 0
    out: str = "entverify-out"

    def __post_init__(self):
        if self.n % 2 or not 4 <= self.n <= 16:
            raise ConfigError(f"ring size must be even and within 4..16, got {self.n}")
        if self.qubit_map is not None:
            qm = tuple(int(q) for q in self.qubit_map)
            if len(qm) != self.n or len(set(qm)) != self.n:
                raise ConfigError("qubit_map must list one distinct qubit per vertex")
            object.__setattr__(self, "qubit_map", qm)
        if self.shots < 1:
            raise ConfigError("shots must be positive")
        if self.resamples < 1:
            raise ConfigError("resamples must be positive")
        for name in ("error_1q", "error_2q", "readout"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        unknown = sorted(set(data) - set(_CONFIG_FIELDS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        if "qubit_map" in data and data["qubit_map"] is not None:
            data = dict(data, qubit_map=tuple(data["qubit_map"]))
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            if path.suffix == ".toml":
                with open(path, "rb") as fh:
                    data = tomllib.load(fh)
            else:
                with open(path) as fh:
                    data = json.load(fh)
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a table of settings")
        return cls.from_dict(data)

    def merged(self, **overrides) -> "PipelineConfig":
        """New config with the non-None overrides applied (flags beat files)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = sorted(set(changes) - set(_CONFIG_FIELDS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return dataclasses.replace(self, **changes)

    def noise_model(self, device: DeviceModel) -> NoiseModel:
        base = NoiseModel.from_device(device)
        return NoiseModel(
            base.error_1q if self.error_1q is None else self.error_1q,
            base.error_2q if self.error_2q is None else self.error_2q,
            base.readout_error if self.readout is None else self.readout,
        )

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        if out["qubit_map"] is not None:
            out["qubit_map"] = list(out["qubit_map"])
        return out


def chain_windows(spec: GraphStateSpec) -> list[tuple[int, ...]]:
    """The n contiguous 4-qubit chains around the ring, in physical labels."""
    qm = spec.qubit_map
    n = len(qm)
    return [tuple(qm[(i + k) % n] for k in range(4)) for i in range(n)]


def _chain_rng(seed: int, namespace: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(namespace, index))


def simulate_chain_records(
    spec: GraphStateSpec,
    subsystem: tuple[int, ...],
    shots: int,
    rng: np.random.Generator,
    noise: NoiseModel | None = None,
    device: DeviceModel | None = None,
) -> list[dict]:
    """Counts records for all 81 settings of one chain."""
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
    return records


def ingest(source) -> dict[tuple[int, ...], TomographyDataset]:
    """Load counts records (a JSONL path or an iterable of dicts) and group
    them into one dataset per subsystem. Shot-total mismatches only warn."""
    records = read_counts_jsonl(source) if isinstance(source, (str, Path)) else list(source)
    groups: dict[tuple[int, ...], list[dict]] = {}
    for rec in records:
        groups.setdefault(tuple(int(q) for q in rec["subsystem"]), []).append(rec)
    return {
        sub: TomographyDataset.from_records(recs, strict_shots=False)
        for sub, recs in groups.items()
    }


def nn_estimate(
    ds: TomographyDataset,
    resamples: int = 1000,
    seed=None,
    pair: tuple[int, ...] | None = None,
) -> NegativityEstimate:
    """Nearest-neighbour negativity of the chain's middle pair, with error
    bars from resampled reconstructions."""
    ds = ds.marginalize(ds.subsystem)
    if pair is None:
        pair = (ds.subsystem[1], ds.subsystem[2])
    stat = lambda d: nn_filter_negativity(reconstruct(d).rho.matrix)
    return bootstrap(
        ds, stat, resamples=resamples, seed=seed, pair=pair, protocol="nn-filter"
    )


def _distilled_estimate(
    ds: TomographyDataset,
    ends: tuple[int, int],
    statistic,
    pair: tuple[int, ...],
    protocol: str,
    resamples: int,
    seed,
) -> NegativityEstimate:
    e, f = ends
    ds = ds.marginalize((e,) + ds.subsystem + (f,))
    conditions = {e: 0, f: 0}
    ds.postselect(conditions)  # surface the low-retention warning once
    stat = lambda d: statistic(d.postselect(conditions, warn=False))
    return bootstrap(
        ds, stat, resamples=resamples, seed=seed, pair=pair, protocol=protocol
    )


def dist2_estimate(ds, ends, resamples=1000, seed=None) -> NegativityEstimate:
    pair = (ds.subsystem[0], ds.subsystem[2])
    return _distilled_estimate(
        ds, ends, dist2_negativity, pair, "dist2", resamples, seed
    )


def dist3_estimate(ds, ends, resamples=1000, seed=None) -> NegativityEstimate:
    pair = (ds.subsystem[0], ds.subsystem[3])
    return _distilled_estimate(
        ds, ends, dist3_negativity, pair, "dist3", resamples, seed
    )


def _window_ends(spec: GraphStateSpec, subsystem: tuple[int, ...]) -> tuple[int, int]:
    """Ring neighbours just outside a contiguous 4-qubit window."""
    qm = spec.qubit_map
    n = len(qm)
    for i in range(n):
        if tuple(qm[(i + k) % n] for k in range(4)) == tuple(subsystem):
            return qm[(i - 1) % n], qm[(i + 4) % n]
    raise ValueError(f"subsystem {subsystem} is not a contiguous ring chain")


def analyze(
    mode: str,
    datasets: dict[tuple[int, ...], TomographyDataset],
    spec: GraphStateSpec,
    resamples: int = 1000,
    seed: int = 0,
) -> dict:
    """Run one analysis mode over ingested datasets; returns a JSON-able dict."""
    if mode not in ANALYZE_MODES:
        raise ValueError(f"unknown analyze mode {mode!r} (pick from {ANALYZE_MODES})")
    windows = chain_windows(spec)
    ordered = [w for w in windows if w in datasets]
    if not ordered:
        raise ValueError("no dataset matches a ring chain of this layout")

    if mode == "fidelity":
        recs = [reconstruct(datasets[w].marginalize(w)) for w in ordered]
        return {"fidelity_upper_bound": fidelity_upper_bound(recs, spec)}

    if mode == "verdict":
        results = []
        for w in ordered:
            est = nn_estimate(
                datasets[w],
                resamples=resamples,
                seed=_chain_rng(seed, _NS_BOOTSTRAP, windows.index(w)),
            )
            results.append((est.pair, est))
        verdict = infer_full_entanglement(spec.graph.n, results)
        return {
            "estimates": [est.to_json() for _, est in results],
            "verdict": verdict.to_json(),
        }

    estimates = []
    for w in ordered:
        seed_w = _chain_rng(seed, _NS_BOOTSTRAP, windows.index(w))
        if mode == "nn":
            est = nn_estimate(datasets[w], resamples=resamples, seed=seed_w)
        else:
            ends = _window_ends(spec, w)
            maker = dist2_estimate if mode == "dist2" else dist3_estimate
            est = maker(datasets[w], ends, resamples=resamples, seed=seed_w)
        estimates.append(est)
    return {"estimates": [est.to_json() for est in estimates]}


@dataclass(frozen=True)
class PipelineResult:
    config: PipelineConfig
    spec: GraphStateSpec
    estimates: tuple[NegativityEstimate, ...]
    verdict: EntanglementVerdict
    fidelity_bound: float
    report: dict
    paths: dict[str, str]


def _pair_label(pair) -> str:
    return "-".join(f"q{q:02d}" for q in pair)


def _rho_json(mat: np.ndarray) -> dict:
    return {
        "re": [[float(x) for x in row] for row in mat.real],
        "im": [[float(x) for x in row] for row in mat.imag],
    }


def build_circuit(spec: GraphStateSpec, device: DeviceModel) -> Circuit:
    """The optimized, scheduled ring-preparation circuit for this layout."""
    return schedule(optimize(lower(optimize(synthesize(spec)), device)))


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Simulate, reconstruct, analyze, and persist every artifact.

    Identical configs produce byte-identical reports; wall-clock details go
    to a separate metadata file so the main outputs stay reproducible.
    """
    started = time.time()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    device = get_device(config.device)
    spec = ring_spec(config.n, config.qubit_map)
    noise = config.noise_model(device)
    prep = build_circuit(spec, device)

    windows = chain_windows(spec)
    all_records: list[dict] = []
    datasets: dict[tuple[int, ...], TomographyDataset] = {}
    for i, window in enumerate(windows):
        rng = np.random.default_rng(_chain_rng(config.seed, _NS_SAMPLE, i))
        records = simulate_chain_records(
            spec, window, config.shots, rng, noise=noise, device=device
        )
        all_records.extend(records)
        datasets[window] = TomographyDataset.from_records(records)

    paths = {"circuit": str(out / "circuit.json"), "counts": str(out / "counts.jsonl")}
    with open(paths["circuit"], "w") as fh:
        json.dump(prep.to_json(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    write_counts_jsonl(all_records, paths["counts"])

    estimates = []
    reconstructions = []
    for i, window in enumerate(windows):
        ds = datasets[window].marginalize(window)
        rec = reconstruct(ds)
        reconstructions.append(rec)
        rec_path = out / f"reconstruction-{_pair_label(window)}.json"
        with open(rec_path, "w") as fh:
            json.dump(
                {
                    "subsystem": list(rec.subsystem),
                    "retained": rec.retained,
                    "rho": _rho_json(rec.rho.matrix),
                    "raw": _rho_json(rec.raw),
                },
                fh,
                sort_keys=True,
                indent=2,
            )
            fh.write("\n")
        paths[f"reconstruction-{_pair_label(window)}"] = str(rec_path)
        estimates.append(
            nn_estimate(
                ds,
                resamples=config.resamples,
                seed=_chain_rng(config.seed, _NS_BOOTSTRAP, i),
            )
        )

    verdict = infer_full_entanglement(
        config.n, [(est.pair, est) for est in estimates]
    )
    bound = fidelity_upper_bound(reconstructions, spec)

    # the output directory is run bookkeeping, not part of the measurement
    config_echo = config.to_json()
    config_echo.pop("out")
    report = {
        "config": config_echo,
        "device": device.name,
        "qubit_map": list(spec.qubit_map),
        "noise": {
            "error_1q": noise.error_1q,
            "error_2q": noise.error_2q,
            "readout": noise.readout_error,
        },
        "estimates": [
            dict(est.to_json(), chain=list(w)) for est, w in zip(estimates, windows)
        ],
        "verdict": verdict.to_json(),
        "fidelity_upper_bound": bound,
    }
    paths["report"] = str(out / "report.json")
    with open(paths["report"], "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")

    paths["csv"] = str(out / "report.csv")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pair", "negativity"])
    for est in estimates:
        writer.writerow([_pair_label(est.pair), f"{est.value:.6f}"])
    with open(paths["csv"], "w", newline="") as fh:
        fh.write(buf.getvalue())

    paths["meta"] = str(out / "run_meta.json")
    with open(paths["meta"], "w") as fh:
        json.dump(
            {
                "version": __version__,
                "started_unix": started,
                "duration_s": time.time() - started,
            },
            fh,
            sort_keys=True,
            indent=2,
        )
        fh.write("\n")

    return PipelineResult(
        config=config,
        spec=spec,
        estimates=tuple(estimates),
        verdict=verdict,
        fidelity_bound=bound,
        report=report,
        paths=paths,
    )
