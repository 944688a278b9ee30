"""structcs: structured random sensing operators and their evaluation harness."""

from .accounting import SamplingCost, StorageMode, StorageProfile, sampling_cost, storage_profile
from .config import Normalization, Scheme, SchemeConfig, derive_seed_triple
from .errors import (
    DensifyRefusedError,
    DimensionMismatchError,
    DivergenceError,
    EnumerationTooLargeError,
    InvalidConfigError,
    InvalidSignalError,
    NumericallySingularError,
    StructcsError,
    TooFewMeasurementsError,
    UndefinedCorrelationError,
)
from .images import BUNDLED_IMAGE_NAMES, load_bundled_image, synthetic_image
from .operators import (
    KroneckerOperator,
    OrthoBlockBank,
    RestrictedPermutation,
    RowSelection,
    RowSubsetOperator,
    StructuredOperator,
    build_operator,
    gen_rrp,
    kron_apply,
    selection_counts,
)
from .pgm import read_pgm, write_pgm
from .recon import ReconResult, iht, kcs_recover, omp, psnr, ssim
from .rip import (
    BoundCheckReport,
    RIPEstimate,
    SatisfactionCurve,
    SweepResult,
    block_rip_delta,
    check_composed_bound,
    default_delta_grid,
    estimate_delta,
    exact_rip_delta,
    max_subsignal_sparsity,
    satisfaction_sweep,
    sweep_rows,
)
from .security import (
    ErasureResult,
    LeakageReport,
    adjacent_correlation,
    block_energy_leakage,
    erasure_image_psnr,
    erasure_robustness,
    erasure_sweep,
)
from .signals import (
    Basis,
    SignalInstance,
    SignalKind,
    SignalSpec,
    best_s_term_error,
    gen_block_sparse,
    gen_compressible,
    gen_random_sparse,
    load_signal_text,
)
from .transforms import dct2_forward, dct2_inverse, dct_forward, dct_inverse

__version__ = "0.1.0"
