"""
Utilities package: logging, seed handling and artifact storage.
"""

from .logger import get_logger, setup_logger
from .rng import SeedLike, child_rng, derive_seed, fresh_seed, make_rng, resolve_seed
from .storage import ArtifactStore, clean_for_json, load_json

__all__ = [
    # Logging
    'get_logger',
    'setup_logger',
    # Seeds
    'SeedLike',
    'child_rng',
    'derive_seed',
    'fresh_seed',
    'make_rng',
    'resolve_seed',
    # Storage
    'ArtifactStore',
    'clean_for_json',
    'load_json',
]
