"""Single-image dehazing with a local airlight-coefficient map, plus
no-reference haze-removal metrics."""

__version__ = "0.1.0"

from .dcp import DcpParams, dark_channel, dcp_dehaze, dcp_transmission, estimate_airlight_dcp
from .dehaze import (
    DehazeParams,
    DehazeResult,
    GrayOffset,
    HazeSynthesisParams,
    dehaze_pipeline,
    estimate_gray_offset,
    estimate_k_map,
    estimate_transmission,
    haze_intensity,
    neglected_term_score,
    recover_radiance,
    synthesize_haze,
    transmission_normalizer,
)
from .imaging import (
    FilterParams,
    ImageIOError,
    box_mean_filter,
    channel_mean,
    guided_filter,
    load_image,
    min_channel,
    min_filter,
    save_image,
)
from .metrics import (
    MetricParams,
    MetricReport,
    assess_pair,
    cluster_haze_lines,
    metric_alpha_dc,
    metric_beta_hl,
    metric_e,
    metric_rbar,
    metric_sigma,
    visible_edges,
)
