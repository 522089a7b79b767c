import numpy as np
import pytest

from glyphembed.charset import get_charset
from glyphembed.dataset import GlyphDataset
from glyphembed.raster import FontSource, GlyphImage


def make_synth_dataset(n_fonts=6, charset="0-9", size=64, seed=0) -> GlyphDataset:
    """In-memory dataset of random rectangle 'glyphs'; style = rectangle shade."""
    cs = get_charset(charset)
    rng = np.random.default_rng(seed)
    fonts, images = [], {}
    for i in range(n_fonts):
        fid = f"font{i:02d}"
        fonts.append(FontSource(fid, None))
        shade = rng.random() * 0.4
        for cp in cs.codepoints:
            img = np.ones((size, size), dtype=np.float64)
            y, x = rng.integers(4, size - 24, size=2)
            h, w = rng.integers(8, 20, size=2)
            img[y : y + h, x : x + w] = shade
            images[(fid, cp)] = GlyphImage(fid, cp, img)
    return GlyphDataset(cs, fonts, images, size)


@pytest.fixture
def synth_dataset() -> GlyphDataset:
    return make_synth_dataset()


@pytest.fixture(scope="session")
def font_corpus(tmp_path_factory):
    """Real .ttf files bundled with installed packages, copied to one directory."""
    import importlib.util
    import pathlib
    import shutil

    import matplotlib

    dst = tmp_path_factory.mktemp("fonts")
    mpl = pathlib.Path(matplotlib.get_data_path()) / "fonts"
    for p in sorted(mpl.rglob("*.ttf")) + sorted(mpl.rglob("*.otf")):
        shutil.copy(p, dst / p.name)
    spec = importlib.util.find_spec("marimo")
    if spec is not None:
        root = pathlib.Path(spec.origin).parent
        for p in sorted(root.rglob("*.ttf")):
            shutil.copy(p, dst / ("KaTeX_" + p.name if not p.name.startswith("KaTeX") else p.name))
    return dst


@pytest.fixture(scope="session")
def az_dataset(font_corpus, tmp_path_factory):
    """Rendered A-Z dataset over the real font corpus (session-cached)."""
    from glyphembed.dataset import render_dataset

    out = tmp_path_factory.mktemp("glyphs_az")
    return render_dataset(font_corpus, out, get_charset("A-Z"), 64)
