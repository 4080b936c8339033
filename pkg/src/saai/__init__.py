"""Airborne synthetic-aperture anomaly imaging.

Per-frame RX anomaly masks are projected onto a virtual focal plane and
integrated over a sliding flight window; occluders disagree across
viewpoints while ground-level targets accumulate.  The package bundles
the detector, the geometry and integration core, a procedural forest
simulator for controlled experiments, evaluation metrics, a streaming
pipeline, dataset storage, and a CLI plus HTTP tuning service.
"""

from .errors import SaaiError
from .geometry import (
    CameraIntrinsics,
    FocalPlaneSpec,
    Frame,
    Pose,
    default_plane_for_flight,
)
from .rx import AnomalyMask, RxScores, rx_detect, rx_score, threshold_mask
from .integrate import (
    IntegralImage,
    SaaiImage,
    ad_on_integral,
    apply_contrast,
    integrate,
    saai,
)
from .forest import (
    GroundTruth,
    Scene,
    SceneSpec,
    TargetSpec,
    ThermalParams,
    generate_scene,
    linear_path,
    render_frame,
    render_ground_truth,
    simulate_flight,
)
from .metrics import (
    EvalResult,
    SweepProtocol,
    compare_conditions,
    evaluate,
    summarize,
)
from .pipeline import (
    PipelineConfig,
    RenderParams,
    WindowIntegrator,
    collect_stats,
    run_pipeline,
)
from .dataset import (
    hot_colormap,
    import_geodetic,
    read_dataset,
    write_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "SaaiError",
    "CameraIntrinsics",
    "FocalPlaneSpec",
    "Frame",
    "Pose",
    "default_plane_for_flight",
    "AnomalyMask",
    "RxScores",
    "rx_detect",
    "rx_score",
    "threshold_mask",
    "IntegralImage",
    "SaaiImage",
    "ad_on_integral",
    "apply_contrast",
    "integrate",
    "saai",
    "GroundTruth",
    "Scene",
    "SceneSpec",
    "TargetSpec",
    "ThermalParams",
    "generate_scene",
    "linear_path",
    "render_frame",
    "render_ground_truth",
    "simulate_flight",
    "EvalResult",
    "SweepProtocol",
    "compare_conditions",
    "evaluate",
    "summarize",
    "PipelineConfig",
    "RenderParams",
    "WindowIntegrator",
    "collect_stats",
    "run_pipeline",
    "hot_colormap",
    "import_geodetic",
    "read_dataset",
    "write_dataset",
    "__version__",
]
