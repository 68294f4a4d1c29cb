"""HTTP facade over circuit synthesis, simulation, ingestion, reconstruction,
and entanglement analysis. The CLI talks to this app in-process by default.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .circuits import get_device
from .errors import EntverifyError
from .graphs import ring_spec
from .pipeline import (
    _NS_SAMPLE,
    _chain_rng,
    _rho_json,
    analyze,
    build_circuit,
    chain_windows,
    ingest,
    PipelineConfig,
    run_pipeline,
    simulate_chain_records,
)
from .sim import NoiseModel
from .tomography import reconstruct


class NoiseSpec(BaseModel):
    error_1q: float = Field(0.0, ge=0.0, le=1.0)
    error_2q: float = Field(0.0, ge=0.0, le=1.0)
    readout: float = Field(0.0, ge=0.0, le=1.0)

    def to_model(self) -> NoiseModel:
        return NoiseModel(self.error_1q, self.error_2q, self.readout)


class SynthRequest(BaseModel):
    n: int = 8
    qubit_map: list[int] | None = None
    device: str = "ibmqx5"


class SimulateRequest(SynthRequest):
    shots: int = Field(2048, ge=1)
    seed: int = 0
    subsystem: list[int] | None = None  # one chain; omitted means every chain
    noise: NoiseSpec | None = None


class RecordsRequest(BaseModel):
    records: list[dict]


class AnalyzeRequest(RecordsRequest):
    mode: str
    n: int = 8
    qubit_map: list[int] | None = None
    resamples: int = Field(1000, ge=1)
    seed: int = 0


def create_app() -> FastAPI:
    app = FastAPI(title="entverify", version=__version__)

    @app.exception_handler(EntverifyError)
    async def _domain_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/device/{name}")
    def device(name: str):
        return get_device(name).to_json()

    @app.post("/synth")
    def synth(req: SynthRequest):
        spec = ring_spec(req.n, req.qubit_map)
        circuit = build_circuit(spec, get_device(req.device))
        return {"circuit": circuit.to_json(), "qubit_map": list(spec.qubit_map)}

    @app.post("/simulate")
    def simulate(req: SimulateRequest):
        spec = ring_spec(req.n, req.qubit_map)
        dev = get_device(req.device)
        noise = req.noise.to_model() if req.noise else None
        if req.subsystem is not None:
            chains = [tuple(req.subsystem)]
        else:
            chains = chain_windows(spec)
        records = []
        for i, chain in enumerate(chains):
            rng = np.random.default_rng(_chain_rng(req.seed, _NS_SAMPLE, i))
            records.extend(
                simulate_chain_records(
                    spec, chain, req.shots, rng, noise=noise, device=dev
                )
            )
        return {"records": records}

    @app.post("/ingest")
    def ingest_records(req: RecordsRequest):
        datasets = ingest(req.records)
        summary = []
        for sub in sorted(datasets):
            ds = datasets[sub]
            totals = [ds.shots(s) for s in ds.settings]
            summary.append(
                {
                    "subsystem": list(sub),
                    "settings": len(ds.blocks),
                    "min_shots": min(totals),
                    "max_shots": max(totals),
                }
            )
        return {"datasets": summary}

    @app.post("/reconstruct")
    def reconstruct_records(req: RecordsRequest):
        datasets = ingest(req.records)
        out = []
        for sub in sorted(datasets):
            rec = reconstruct(datasets[sub].marginalize(sub))
            out.append(
                {
                    "subsystem": list(rec.subsystem),
                    "retained": rec.retained,
                    "rho": _rho_json(rec.rho.matrix),
                    "raw": _rho_json(rec.raw),
                }
            )
        return {"reconstructions": out}

    @app.post("/analyze")
    def analyze_records(req: AnalyzeRequest):
        spec = ring_spec(req.n, req.qubit_map)
        datasets = ingest(req.records)
        return analyze(
            req.mode, datasets, spec, resamples=req.resamples, seed=req.seed
        )

    @app.post("/pipeline")
    def pipeline(body: dict):
        config = PipelineConfig.from_dict(body)
        result = run_pipeline(config)
        return {"report": result.report, "paths": result.paths}

    return app
