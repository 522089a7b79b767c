"""Command line interface.

Subcommands: render (font files -> PNG glyph dataset), train, eval, probe,
index, serve. Exit codes: 0 success, 2 validation error, 1 runtime error.
The --data flag falls back to the GLYPHEMBED_DATA environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .charset import get_charset
from .errors import (
    ConfigInvalid,
    DatasetTooSmall,
    EmptyDataset,
    GlyphEmbedError,
    InvalidSplit,
    MixedLayout,
)

log = logging.getLogger("glyphembed")

VALIDATION_ERRORS = (
    ConfigInvalid,
    EmptyDataset,
    MixedLayout,
    InvalidSplit,
    DatasetTooSmall,
    FileNotFoundError,
    ValueError,
)


def _add_data_args(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument(
        "--data",
        default=os.environ.get("GLYPHEMBED_DATA"),
        required=required and "GLYPHEMBED_DATA" not in os.environ,
        help="dataset root (font files or pre-rendered PNG dirs); default $GLYPHEMBED_DATA",
    )
    p.add_argument("--charset", default="0-Z", help="charset name or explicit characters")
    p.add_argument("--size", type=int, default=64, help="glyph raster size in pixels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glyphembed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="rasterize font files into a PNG glyph dataset")
    p.add_argument("--fonts", required=True, help="directory containing .ttf/.otf files")
    p.add_argument("--out", required=True, help="output dataset root")
    p.add_argument("--charset", default="0-Z")
    p.add_argument("--size", type=int, default=64)

    p = sub.add_parser("train", help="train an encoder")
    _add_data_args(p)
    p.add_argument("--out", required=True, help="run directory for checkpoint + log")
    p.add_argument("--config", help="JSON file mirroring TrainConfig fields")
    p.add_argument("--objective", choices=("paired_glyph", "classification", "autoencoder", "style_transfer", "triplet"))
    p.add_argument("--steps", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--lr", type=float, dest="learning_rate")
    p.add_argument("--batch-fonts", type=int, dest="n_fonts_per_batch")
    p.add_argument("--feat-dim", type=int, dest="feat_dim")
    p.add_argument("--seed", type=int)
    p.add_argument("--eval-every", type=int, dest="eval_every")
    p.add_argument("--denominator", choices=("paper", "reference"))
    p.add_argument("--margin", type=float)
    p.add_argument("--augment", choices=("auto", "on", "off"), default="auto")
    p.add_argument("--val-fonts", type=int, default=0, help="held-out fonts for MACC probes")
    p.add_argument("--resume", help="checkpoint to continue from")

    p = sub.add_parser("eval", help="print retrieval MACC as percent")
    _add_data_args(p, required=False)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--checkpoint", help="trained checkpoint to embed --data with")
    src.add_argument("--index", help="prebuilt .gidx index to evaluate directly")
    p.add_argument("--query-charset", help="cross-charset query set (with --gallery-charset)")
    p.add_argument("--gallery-charset")
    p.add_argument("--val-fonts", type=int, default=0, help="evaluate only the held-out split")
    p.add_argument("--seed", type=int, default=0, help="split seed when --val-fonts is used")
    p.add_argument("--out", help="write the full RetrievalReport JSON here")

    p = sub.add_parser("probe", help="linear attribute probe from font embeddings")
    _add_data_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--attributes", required=True, help="CSV font_id,attr_1..attr_N in [0,1]")
    p.add_argument("--val-fonts", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("index", help="build and save a font-embedding index")
    _add_data_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output .gidx path")
    p.add_argument("--aggregation", choices=("mean", "maxpool"), default="mean")
    p.add_argument("--assets", help="write preview/glyph PNGs here")

    p = sub.add_parser("serve", help="serve retrieval + map over HTTP")
    p.add_argument("--index", required=True)
    p.add_argument("--checkpoint", help="encoder for image-probe queries")
    p.add_argument("--assets", help="assets dir written by `index`")
    p.add_argument("--static", help="static frontend directory to mount at /")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--k", type=int, default=10, help="default result count")

    return parser


# --- subcommand bodies ------------------------------------------------------


def _cmd_render(args) -> int:
    from .dataset import render_dataset

    charset = get_charset(args.charset)
    dataset = render_dataset(args.fonts, Path(args.out), charset, args.size)
    print(f"rendered {len(dataset.fonts)} fonts x {len(charset)} chars -> {args.out}")
    for exc in dataset.exclusions:
        log.warning("excluded %s: %s", exc.font_id, exc.reason)
    return 0


def _load_train_config(args):
    from .trainer import TrainConfig

    base: dict = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    for key in (
        "objective",
        "steps",
        "tau",
        "learning_rate",
        "n_fonts_per_batch",
        "feat_dim",
        "seed",
        "eval_every",
        "denominator",
        "margin",
    ):
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    if args.augment != "auto":
        base["augmentation"] = args.augment == "on"
    base.setdefault("input_size", args.size)
    return TrainConfig.from_dict({**TrainConfig().to_dict(), **base})


def _split(dataset, val_fonts: int, seed: int):
    from .dataset import SplitSpec, split_fonts

    if val_fonts <= 0:
        return dataset, None
    return split_fonts(dataset, SplitSpec(seed, val_fonts))


def _cmd_train(args) -> int:
    from .dataset import load_dataset
    from .nn.checkpoint import load_checkpoint
    from .trainer import resume as trainer_resume, train

    config = _load_train_config(args)
    dataset = load_dataset(args.data, get_charset(args.charset), args.size)
    train_ds, val_ds = _split(dataset, args.val_fonts, config.seed)
    if args.resume:
        ckpt = load_checkpoint(args.resume)
        _, report = trainer_resume(ckpt, train_ds, config.steps, val_ds=val_ds, out_dir=args.out)
    else:
        _, report = train(train_ds, config, val_ds=val_ds, out_dir=args.out)
    print(f"checkpoint: {report.checkpoint_path}")
    print(f"final loss: {report.final_loss:.6f}")
    if report.best_macc is not None:
        print(f"best val MACC: {report.best_macc * 100:.2f} (step {report.best_step})")
    return 0


def _table_from_args(args):
    """EmbeddingTable either from an index file or by embedding --data."""
    from .evalkit import EmbeddingTable, embed_all

    if args.index:
        from .fontindex import load_index

        idx = load_index(args.index)
        return EmbeddingTable(idx.font_ids, idx.charset, idx.glyph_vectors.astype("float64"), args.index)
    from .dataset import load_dataset
    from .nn.checkpoint import load_checkpoint
    from .trainer import encoder_from_checkpoint

    if not args.data:
        raise ConfigInvalid("--data (or GLYPHEMBED_DATA) is required with --checkpoint")
    dataset = load_dataset(args.data, get_charset(args.charset), args.size)
    if args.val_fonts:
        _, dataset = _split(dataset, args.val_fonts, args.seed)
    model = encoder_from_checkpoint(load_checkpoint(args.checkpoint))
    return embed_all(model, dataset, source=args.checkpoint)


def _cmd_eval(args) -> int:
    from .evalkit import cross_macc, retrieval_macc

    table = _table_from_args(args)
    if bool(args.query_charset) != bool(args.gallery_charset):
        raise ConfigInvalid("--query-charset and --gallery-charset go together")
    if args.query_charset:
        report = cross_macc(
            table, get_charset(args.query_charset), get_charset(args.gallery_charset)
        )
    else:
        report = retrieval_macc(table)
    print(f"MACC: {report.macc * 100:.2f}")
    if args.out:
        Path(args.out).write_text(report.to_json(indent=2))
    return 0


def _cmd_probe(args) -> int:
    from .dataset import load_dataset
    from .evalkit import embed_all, linear_probe, load_attribute_csv
    from .nn.checkpoint import load_checkpoint
    from .trainer import encoder_from_checkpoint

    dataset = load_dataset(args.data, get_charset(args.charset), args.size)
    train_ds, val_ds = _split(dataset, args.val_fonts, args.seed)
    if val_ds is None:
        raise ConfigInvalid("--val-fonts must be positive for the probe")
    model = encoder_from_checkpoint(load_checkpoint(args.checkpoint))
    table = embed_all(model, dataset, source=args.checkpoint)
    attrs = load_attribute_csv(args.attributes)
    result = linear_probe(table, attrs, train_ds.font_ids, val_ds.font_ids, seed=args.seed)
    print(f"probe L1: {result.best_val_l1:.4f} (lr {result.best_lr:g})")
    return 0


def _cmd_index(args) -> int:
    from .dataset import load_dataset
    from .fontindex import build_index, save_index
    from .nn.checkpoint import load_checkpoint
    from .trainer import encoder_from_checkpoint

    dataset = load_dataset(args.data, get_charset(args.charset), args.size)
    model = encoder_from_checkpoint(load_checkpoint(args.checkpoint))
    index = build_index(
        model, dataset, args.aggregation, checkpoint_id=args.checkpoint, assets_dir=args.assets
    )
    path = save_index(index, args.out)
    print(f"indexed {index.n_fonts} fonts x {len(index.charset)} chars -> {path}")
    return 0


def _cmd_serve(args) -> int:
    from .fontindex import load_index
    from .server import serve

    index = load_index(args.index)
    model = None
    if args.checkpoint:
        from .nn.checkpoint import load_checkpoint
        from .trainer import encoder_from_checkpoint

        model = encoder_from_checkpoint(load_checkpoint(args.checkpoint))
    print(f"serving {index.n_fonts} fonts on port {args.port}")
    serve(index, model, args.assets, args.static, args.port, args.k)
    return 0


COMMANDS = {
    "render": _cmd_render,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "probe": _cmd_probe,
    "index": _cmd_index,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GlyphEmbedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
