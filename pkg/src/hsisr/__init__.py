"""Unsupervised hyperspectral single-image super-resolution toolkit.

Decompose a low-resolution hyperspectral cube into endmembers and
abundances, synthesize dead-leaves abundance pairs that mimic the real
abundance statistics, degrade and reconstruct cubes, and score results with
PSNR / SAM / ERGAS. Tensors are exchanged with the external learned
super-resolver as float32 NPY files.
"""

from .cube import (
    AbundanceMaps,
    EndmemberMatrix,
    HsiCube,
    load_tensor,
    normalize_global,
    save_tensor,
)
from .deadleaves import (
    DeadLeavesConfig,
    DeadLeavesResult,
    DeadLeavesSynthesizer,
    Leaf,
    ValuePool,
    build_value_pool,
    derive_seed,
    generate_corpus,
    generate_map,
    generate_map_detailed,
    leaf_footprint,
    splitmix64,
)
from .degrade import (
    PsfConfig,
    PsfDegrader,
    degrade,
    downsample_bicubic,
    gaussian_blur,
    gaussian_kernel,
    upsample_bicubic,
)
from .exceptions import (
    ConfigError,
    CoverageError,
    DataError,
    DegenerateInputError,
    FormatError,
    HsisrError,
    IoError,
    KernelTooLargeError,
    NumericalError,
    RankDeficientError,
    ShapeError,
    SingularSystemError,
    ValidationError,
    WorkdirLockedError,
)
from .metrics import (
    MetricsReport,
    PatchEvaluation,
    PatchReport,
    ergas,
    evaluate_pair,
    evaluate_patches,
    psnr,
    psnr_per_band,
    sam,
    sam_stats,
)
from .pipeline import PipelineConfig
from .unmix import (
    LinearUnmixer,
    UnmixConfig,
    estimate_abundances,
    extract_endmember_indices,
    extract_endmembers,
    reconstruct,
)

__version__ = "0.1.0"
