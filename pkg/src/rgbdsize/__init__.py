"""RGB-D fusion toolkit: align sparse depth with RGB, densify, segment
by depth, and report object dimensions in meters."""

from .bundle import FrameBundle, load_bundle, save_bundle
from .camera import (
    CameraIntrinsics,
    MetricPoint,
    PixelCoord,
    RadialTerms,
    RigidPose,
    apply_pose,
    interpolate_pose,
    project,
    radial_terms,
    relative_pose,
)
from .densify import (
    BilinearStencil,
    DensifyConfig,
    MetricImage,
    SparsePixelCloud,
    densify,
    densify_bilinear,
    densify_nearest,
    project_cloud,
)
from .measure import Measurement, MeasureConfig, measure_extent, measure_scene
from .pipeline import PipelineConfig, Report, render_overlay, run_pipeline
from .segment import (
    ClusterModel,
    DetectionBox,
    SegmentMask,
    kmeans_depth,
    segment_bbox,
    segment_frame,
    select_foreground,
)
from .spatial import IndexedPoint, KdTree, QuadrantNeighbors, build
from .synth import BoxObject, GroundTruth, SceneSpec, generate

__version__ = "0.1.0"
