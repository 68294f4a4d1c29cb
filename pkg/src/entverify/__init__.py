"""Verification toolkit for ring graph states on superconducting devices:
stabilizer simulation, 4-qubit subsystem tomography, and negativity-based
full-entanglement inference."""

__version__ = "0.1.0"

from .analysis import (
    EntanglementVerdict,
    NegativityEstimate,
    SeparationHypothesis,
    SuggestedPtTest,
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
    trace_distance,
)
from .circuits import Circuit, DeviceModel, Gate, get_device, lower, optimize, schedule, synthesize
from .errors import (
    AnnihilationError,
    CapacityError,
    CompilationError,
    ConfigError,
    DegenerateDataError,
    EntverifyError,
    IncompleteDataError,
)
from .graphs import Graph, GraphStateSpec, reduced_density_matrix, ring_graph, ring_spec
from .pauli import DensityMatrix, LocalFilter, PauliString
from .pipeline import PipelineConfig, PipelineResult, analyze, build_circuit, ingest, run_pipeline
from .sim import NoiseModel, StabilizerTableau, sample_shots
from .tomography import (
    TomographyDataset,
    linear_inversion,
    mle_project,
    read_counts_jsonl,
    reconstruct,
    write_counts_jsonl,
)

__all__ = [
    "AnnihilationError",
    "CapacityError",
    "Circuit",
    "CompilationError",
    "ConfigError",
    "DegenerateDataError",
    "DensityMatrix",
    "DeviceModel",
    "EntanglementVerdict",
    "EntverifyError",
    "Gate",
    "Graph",
    "GraphStateSpec",
    "IncompleteDataError",
    "LocalFilter",
    "NegativityEstimate",
    "NoiseModel",
    "PauliString",
    "PipelineConfig",
    "PipelineResult",
    "SeparationHypothesis",
    "StabilizerTableau",
    "SuggestedPtTest",
    "TomographyDataset",
    "analyze",
    "bootstrap",
    "build_circuit",
    "dist2_negativity",
    "dist3_negativity",
    "fidelity",
    "fidelity_upper_bound",
    "get_device",
    "infer_full_entanglement",
    "ingest",
    "linear_inversion",
    "lower",
    "mle_project",
    "negativity",
    "nn_filter_negativity",
    "optimize",
    "partial_transpose",
    "pt_test",
    "read_counts_jsonl",
    "reconstruct",
    "reduced_density_matrix",
    "ring_graph",
    "ring_spec",
    "run_pipeline",
    "sample_shots",
    "schedule",
    "synthesize",
    "trace_distance",
    "write_counts_jsonl",
]
