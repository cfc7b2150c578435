"""Boltzmann sampling benchmark: exact oracles, Gibbs reference sampler,
minor embedding, a phenomenological annealer emulator and diagnostics."""
from ._backend import BACKEND
from .device import (
    AnnealSchedule,
    DeviceEmulator,
    DeviceProfile,
    SamplesetCapError,
    apply_ice,
    autoscale,
    device_sample,
    effective_alpha,
)
from .diagnostics import (
    CoverageReport,
    RetrofitResult,
    SupportError,
    coverage_report,
    distribution_distance,
    empirical_distribution,
    energy_reconstruction,
    retrofit_alpha,
)
from .embedding import (
    Embedding,
    EmbeddingError,
    EmbeddingImpossibleError,
    EmbeddingNotFoundError,
    HardwareGraph,
    chain_breaks,
    chimera_graph,
    embed_model,
    find_embedding,
    unembed,
    validate_embedding,
)
from .ising import (
    DistributionTable,
    EnumerationLimitError,
    IsingModel,
    QuboModel,
    diagonal_energies,
    energy,
    exact_distribution,
    ising_to_qubo,
    qubo_ising_convert,
    qubo_to_ising,
    random_model,
)
from .samplers import SamplerConfig, Sampleset, exact_sample, gibbs_sample

__version__ = "0.1.0"
