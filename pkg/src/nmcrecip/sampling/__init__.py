"""Exact forward, bridge and h-transform samplers; thinning and superposition."""

from .bridges import (
    bridge_intensity,
    sample_bridge,
    sample_bridge_batch,
    sample_bridge_rejection,
    sample_bridge_rejection_batch,
    sample_htransform_batch,
    sample_poisson_bridge,
    sample_poisson_bridge_batch,
)
from .forward import (
    sample_nmc,
    sample_nmc_batch,
    superpose_batches,
    superpose_paths,
    thin_batch,
    thin_path,
)
from .harmonic import HarmonicTable, solve_harmonic, solve_terminal

__all__ = [
    "HarmonicTable",
    "bridge_intensity",
    "sample_bridge",
    "sample_bridge_batch",
    "sample_bridge_rejection",
    "sample_bridge_rejection_batch",
    "sample_htransform_batch",
    "sample_nmc",
    "sample_nmc_batch",
    "sample_poisson_bridge",
    "sample_poisson_bridge_batch",
    "solve_harmonic",
    "solve_terminal",
    "superpose_batches",
    "superpose_paths",
    "thin_batch",
    "thin_path",
]
