import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rgbdsize.camera import CameraIntrinsics
from rgbdsize.pipeline import PipelineConfig, run_pipeline
from rgbdsize.synth import BoxObject, SceneSpec, generate

# numba-backed calls can be slow on their first (compiling) example
settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile every numba kernel once so timed tests measure steady state."""
    intr = CameraIntrinsics(64, 48, 52.0, 52.0, 32.0, 24.0)
    spec = SceneSpec(
        intrinsics=intr,
        background_depth=1.3,
        objects=(BoxObject("warm", 0.0, 0.0, 0.2, 0.3, 0.5),),
        sample_stride=8,
    )
    bundle, _ = generate(spec)
    run_pipeline(bundle, PipelineConfig(interp="bilinear", edge_threshold=0.3, bench=True))
    run_pipeline(bundle, PipelineConfig(interp="nearest"))
    return True
