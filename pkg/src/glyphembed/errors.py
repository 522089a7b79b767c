"""Exception hierarchy shared across the package."""


class GlyphEmbedError(Exception):
    """Base class for all glyphembed errors."""


# Rasterization / dataset loading
class MissingGlyph(GlyphEmbedError):
    pass


class UnreadableFont(GlyphEmbedError):
    pass


class BlankGlyph(GlyphEmbedError):
    pass


class EmptyDataset(GlyphEmbedError):
    pass


class MixedLayout(GlyphEmbedError):
    pass


class InvalidSplit(GlyphEmbedError):
    pass


class DatasetTooSmall(GlyphEmbedError):
    pass


# Numeric core / models
class ShapeMismatch(GlyphEmbedError):
    pass


class ModeMismatch(GlyphEmbedError):
    pass


class NonFiniteLoss(GlyphEmbedError):
    pass


class NonFiniteGradient(GlyphEmbedError):
    pass


# Objectives
class ZeroVector(GlyphEmbedError):
    pass


class BadBatch(GlyphEmbedError):
    pass


class LabelOutOfRange(GlyphEmbedError):
    pass


# Persistence
class Corrupt(GlyphEmbedError):
    pass


class VersionMismatch(GlyphEmbedError):
    pass


# Training configuration
class ConfigInvalid(GlyphEmbedError):
    pass


# Evaluation
class SameCharacter(GlyphEmbedError):
    pass


class CharsetTooSmall(GlyphEmbedError):
    pass


class EmptyCharset(GlyphEmbedError):
    pass


class MissingAttributes(GlyphEmbedError):
    pass


class IncomparableReports(GlyphEmbedError):
    pass


# Index / serving
class EmptyIndex(GlyphEmbedError):
    pass


class ModelUnavailable(GlyphEmbedError):
    pass


class DegenerateData(GlyphEmbedError):
    pass
