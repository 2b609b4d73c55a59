"""padvision: landing-pad detection pipeline and autonomous landing simulator.

The detection chain (greyscale, Gaussian blur, adaptive windowed threshold
with bilinear interpolation and a one-frame lag, binary morphology, connected
component labeling, altitude-gated shape classification, marker pose) feeds a
three-phase landing state machine; a deterministic synthetic renderer
provides ground truth for evaluation.
"""

__version__ = "0.1.0"

from .ccl import ComponentRecord, label_components
from .config import Config, LanderParams, PipelineOptions, load_config
from .imgio import Frame, annotate, read_pnm, write_pnm
from .lander import DroneState, LandingCommand, LandingController, simulate
from .marker import MarkerPose, estimate_pose, to_metric
from .pipeline import Detector, FrameResult, detect_single
from .preprocess import dilate_3x3, erode_3x3, gaussian_5x5, median_5x5, to_greyscale
from .shapes import (
    CameraModel,
    MarkerSpec,
    ShapeDetection,
    ToleranceProfile,
    classify_component,
    expected_sizes,
)
from .synth import Background, CorpusRecipe, ScenePose, make_corpus, render
from .threshold import (
    ThresholdGrid,
    apply_global,
    apply_interpolated,
    apply_local,
    apply_windowed,
    compute_grid,
    stream_binarize,
)

__all__ = [
    "Background",
    "CameraModel",
    "ComponentRecord",
    "Config",
    "CorpusRecipe",
    "Detector",
    "DroneState",
    "Frame",
    "FrameResult",
    "LanderParams",
    "LandingCommand",
    "LandingController",
    "MarkerPose",
    "MarkerSpec",
    "PipelineOptions",
    "ScenePose",
    "ShapeDetection",
    "ThresholdGrid",
    "ToleranceProfile",
    "annotate",
    "apply_global",
    "apply_interpolated",
    "apply_local",
    "apply_windowed",
    "classify_component",
    "compute_grid",
    "detect_single",
    "dilate_3x3",
    "erode_3x3",
    "estimate_pose",
    "expected_sizes",
    "gaussian_5x5",
    "label_components",
    "load_config",
    "make_corpus",
    "median_5x5",
    "read_pnm",
    "render",
    "simulate",
    "stream_binarize",
    "to_greyscale",
    "to_metric",
    "write_pnm",
]
