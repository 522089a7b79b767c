"""Discriminative font embeddings from glyph images.

Train a glyph encoder with paired-glyph matching (or the baseline objectives),
evaluate it with rank-based retrieval metrics, and serve nearest-font lookup
plus a 2D latent map over an embedding index.
"""

from .charset import CharSet, charset_from_chars, get_charset
from .errors import GlyphEmbedError

__version__ = "0.1.0"

__all__ = [
    "CharSet",
    "GlyphEmbedError",
    "GlyphEncoder",
    "charset_from_chars",
    "get_charset",
    "__version__",
]


def __getattr__(name):
    # GlyphEncoder pulls in the trainer stack; import it lazily so light
    # consumers (e.g. the CLI's render path) stay fast.
    if name == "GlyphEncoder":
        from .estimator import GlyphEncoder

        return GlyphEncoder
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
