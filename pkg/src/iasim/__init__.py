"""Limited-feedback interference alignment: simulator and validation suite."""

from .channel import ChannelSet, SystemConfig, sample_frame
from .feedback import Codebook, FeedbackReport, build_codebook, quantize
from .ia import IAState, SchedulingDecision, run_algorithm1, select_users
from .linalg import hermitian_eig, null_space, rng_stream

__version__ = "0.1.0"

__all__ = [
    "ChannelSet",
    "SystemConfig",
    "sample_frame",
    "Codebook",
    "FeedbackReport",
    "build_codebook",
    "quantize",
    "IAState",
    "SchedulingDecision",
    "run_algorithm1",
    "select_users",
    "hermitian_eig",
    "null_space",
    "rng_stream",
    "__version__",
]
