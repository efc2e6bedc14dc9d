"""Certified embeddings of bounded fixed-precision point sets into low-dimensional integer lattices."""
from .diophantine import InvSqrt, RationalValue, ScalingWitness, Sqrt, continued_fraction, find_scaling
from .embedder import (
    DistortionReport,
    EmbedConfig,
    EmbeddingResult,
    certify,
    embed,
    injectivity_floor,
    naive_baseline,
    search_lambda,
)
from .geometry import BlockRotation, apply_block_rotation, minimal_enclosing_ball, snap_center_to_lattice
from .jl_projection import ProjectionMatrix, certify_jl, choose_k, find_good_projection, sample_projection
from .lattice_core import (
    LatticeParams,
    LatticePoint,
    LatticePointSet,
    ScaledVector,
    is_lattice_member,
    nearest_lattice_point,
    sample_point_set,
)
from .rotation_search import RotationWitness, search_rotation, verify_witness

__version__ = "0.1.0"

__all__ = [
    "BlockRotation",
    "DistortionReport",
    "EmbedConfig",
    "EmbeddingResult",
    "InvSqrt",
    "LatticeParams",
    "LatticePoint",
    "LatticePointSet",
    "ProjectionMatrix",
    "RationalValue",
    "RotationWitness",
    "ScaledVector",
    "ScalingWitness",
    "Sqrt",
    "apply_block_rotation",
    "certify",
    "certify_jl",
    "choose_k",
    "continued_fraction",
    "embed",
    "find_good_projection",
    "find_scaling",
    "injectivity_floor",
    "is_lattice_member",
    "minimal_enclosing_ball",
    "naive_baseline",
    "nearest_lattice_point",
    "sample_point_set",
    "sample_projection",
    "search_lambda",
    "search_rotation",
    "snap_center_to_lattice",
    "verify_witness",
]
