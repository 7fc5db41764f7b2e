"""
Data layer - seeded synthesis and persistence

Submodules:
- rng: counter-based named random streams
- synth: sample_elements, make_labeled, make_observed, make_test, default_noise_sigma
- formats: dataset (SPND) and checkpoint (SPNC) binaries
- pgm: plain-text PGM export

Only ``rng`` is imported here; ``synth`` and ``formats`` depend on the model
and training packages, which themselves draw from ``rng``.
"""
from .rng import generator, stream_key, uniform_rows, item_normals, permutation

__all__ = [
    "generator",
    "stream_key",
    "uniform_rows",
    "item_normals",
    "permutation",
]
