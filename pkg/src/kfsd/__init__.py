"""Functional outlier detection with the kernelized functional spatial depth."""

__version__ = "0.1.0"

from .depths import (
    DEPTH_IDS,
    DepthScores,
    DepthSpec,
    KernelConfig,
    ProjectionSet,
    depth_all,
    depth_of,
    fmd,
    fsd,
    gaussian_kernel,
    hmd,
    idd,
    kfsd,
    mbd,
    rtd,
)
from .detect import (
    BootstrapConfig,
    DetectionReport,
    DetectorConfig,
    bootstrap_detect,
    fbp_detect,
    kfsd_detect,
    select_threshold,
)
from .errors import KFSDError
from .fdata import (
    Curve,
    FunctionalSample,
    Grid,
    build_sample,
    distance_percentile,
    l2_distance,
    pairwise_distances,
    sample_covariance,
)
from .kernels import BACKEND
from .simgen import MixtureModelSpec, gen_dataset, gen_study_inputs
