"""hsv4d: reference-free validation of sparse 4D tomographic reconstructions.

The toolkit generates synthetic dynamic phantoms, simulates sparse and
ultra-sparse projection acquisition, reconstructs with a pluggable solver,
and estimates reconstruction fidelity through bootstrapped cross-validation
with six 4D metrics, including a 4D Fourier hypershell correlation with
half-bit resolution estimation.
"""

from .core4d import (
    GeometrySpec,
    Volume4D,
    acquired_fraction,
    check_temporal_nyquist,
    crowther_count,
    nyquist_velocity,
    read_volume,
    write_volume,
)
from .errors import (
    ConfigError,
    DegenerateInputError,
    DomainError,
    FormatError,
    GeometryError,
    Hsv4dError,
    PipelineError,
    SamplingError,
    SolverError,
)
from .phantom import EnsembleSpec, PhantomParams, generate_ensemble, generate_experiment
from .projector import (
    ProjectionSet,
    acquire,
    evenly_spaced_angles,
    project_frame,
    read_projections,
    ultra_sparse_angles,
    write_projections,
)
from .reconstruct import (
    Reconstructor,
    SirtReconstructor,
    SolverConfig,
    backproject_frame,
    reconstruct_pseudo_reference,
    sirt_reconstruct,
)
from .metrics4d import (
    FhcCurve,
    MetricConfig,
    MetricKind,
    MetricReport,
    dssim,
    evaluate_all,
    fhc,
    half_bit,
    mse,
    ncc,
    nmi,
    psnr,
)
from .bootstrap import (
    ComparisonKind,
    MetricStats,
    StatsSummary,
    SubsetSpec,
    aggregate,
    cross_validate,
    interlace,
    sample_experiment_subsets,
    sample_projection_subsets,
)

__version__ = "0.1.0"
