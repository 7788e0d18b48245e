"""Fast image stitching from multiscale window-extremum features."""

from .compositor import Canvas, Placement, compute_canvas, warp_and_blend
from .descriptor import (
    DescribedFeatures,
    DescriptorConfig,
    DescriptorVector,
    compute_descriptor,
    describe_features,
    dominant_orientation,
    gradient_at,
    region_size,
)
from .detector import (
    FeaturePoint,
    ScaleSet,
    Window,
    dedupe_features,
    detect_features,
    detect_window_extrema,
    partition_windows,
)
from .errors import ConfigError, DegenerateSampleError, FormatError, RegistrationError
from .imaging import (
    IntensityImage,
    RampedImage,
    apply_linear_ramp,
    default_alpha,
    load_image,
    save_png,
)
from .matcher import MatcherConfig, MatchPair, descriptor_distance, match_features
from .mosaic import (
    MosaicPlan,
    PairwiseTransformTable,
    build_pairwise_table,
    plan_and_stitch,
    select_reference,
)
from .pipeline import PipelineConfig, load_config, prepare_image, stitch_pair
from .registration import (
    RansacConfig,
    RegistrationResult,
    RigidTransform,
    apply_transform,
    estimate_rigid,
    ransac_rigid,
)

__version__ = "0.1.0"
