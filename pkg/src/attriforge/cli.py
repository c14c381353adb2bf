"""Command-line front end: dataset generation, training, evaluation,
single-image editing, and service startup.

Config files are flat `key=value` text (JSON objects with the same keys
are accepted too); `--set key=value` overrides are applied after the file,
and the env var ATTRIFORGE_SEED overrides the seed last. Exit codes:
0 success, 1 domain/runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import functools
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import AugmentationConfig, generate_proxy_dataset, load_manifest
from .errors import AttriforgeError, CheckpointError, ConfigParseError
from .trainer import TrainingConfig, config_from_dict, config_to_dict, train

SEED_ENV_VAR = "ATTRIFORGE_SEED"

_AUG_KEYS = {
    "aug_resize_to": ("resize_to", int),
    "aug_crop_to": ("crop_to", int),
    "aug_final_size": ("final_size", int),
    "aug_hue_shift_max": ("hue_shift_max", float),
    "aug_sat_shift_max": ("sat_shift_max", float),
    "aug_flip": ("enable_flip", None),
    "aug_rotate": ("enable_rotate", None),
    "aug_crop": ("enable_crop", None),
    "aug_color": ("enable_color", None),
}
_BOOLS = {"true": True, "false": False, "1": True, "0": False}


def _read_config_file(path: Path) -> dict[str, str]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigParseError(f"{path}: JSON config must be an object")
        out = {}
        for key, value in loaded.items():
            if isinstance(value, bool):
                out[key] = "true" if value else "false"
            elif isinstance(value, list):
                out[key] = ",".join(str(v) for v in value)
            else:
                out[key] = str(value)
        return out
    values = {}
    for line_no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigParseError(f"{path}:{line_no}: expected key=value, got '{stripped}'")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def parse_config(
    path: Path | None, overrides: list[str] | None = None
) -> tuple[TrainingConfig, AugmentationConfig]:
    """Resolve defaults <- file <- overrides <- ATTRIFORGE_SEED."""
    values = _read_config_file(path) if path else {}
    for item in overrides or []:
        if "=" not in item:
            raise ConfigParseError(f"override '{item}' is not of the form key=value")
        key, _, value = item.partition("=")
        values[key.strip()] = value.strip()

    aug_values: dict[str, object] = {}
    train_values: dict[str, str] = {}
    for key, raw in values.items():
        if key in _AUG_KEYS:
            field, caster = _AUG_KEYS[key]
            try:
                if caster is None:
                    aug_values[field] = _BOOLS[raw.strip().lower()]
                else:
                    aug_values[field] = caster(raw)
            except (KeyError, ValueError) as exc:
                raise ConfigParseError(f"key '{key}': cannot parse '{raw}'") from exc
        else:
            train_values[key] = raw
    config = config_from_dict(train_values)

    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            config = replace(config, seed=int(env_seed))
        except ValueError as exc:
            raise ConfigParseError(f"{SEED_ENV_VAR}='{env_seed}' is not an integer") from exc

    aug_values.setdefault("final_size", config.image_size)
    aug = AugmentationConfig(**aug_values)
    return config, aug


def _echo_config(config: TrainingConfig, aug: AugmentationConfig | None = None) -> None:
    print("resolved configuration:")
    for key, value in config_to_dict(config).items():
        print(f"  {key}={value}")
    if aug is not None:
        for key, (field, _) in _AUG_KEYS.items():
            value = getattr(aug, field)
            print(f"  {key}={str(value).lower() if isinstance(value, bool) else value}")


_formatter = functools.partial(argparse.HelpFormatter, width=96, max_help_position=34)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attriforge",
        description="Train and serve an attribute-conditioned appearance editor.",
        formatter_class=_formatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("generate-data", help="render a procedural labelled dataset", formatter_class=_formatter)
    p.add_argument("--out", required=True, type=Path, help="output dataset directory")
    p.add_argument("--samples", type=int, default=256, help="number of samples to render")
    p.add_argument("--seed", type=int, default=0, help="rng seed for rendering")
    p.add_argument("--image-size", type=int, default=256, help="rendered image edge in pixels")
    p.add_argument("--attribute", default="glossy", help="attribute name for the labels")

    p = sub.add_parser("train", help="run adversarial training", formatter_class=_formatter)
    p.add_argument("--data", required=True, type=Path, help="dataset manifest (JSONL)")
    p.add_argument("--out", required=True, type=Path, help="directory for checkpoints and the loss log")
    p.add_argument("--config", type=Path, help="key=value or JSON config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="config override, repeatable")
    p.add_argument("--resume", type=Path, help="checkpoint to resume from")

    p = sub.add_parser("eval", help="reconstruction metrics over a manifest", formatter_class=_formatter)
    p.add_argument("--checkpoint", required=True, type=Path, help="trained checkpoint")
    p.add_argument("--manifest", required=True, type=Path, help="dataset manifest (JSONL)")
    p.add_argument("--out", required=True, type=Path, help="per-sample metric CSV to write")

    p = sub.add_parser("edit", help="edit one image at a target attribute", formatter_class=_formatter)
    p.add_argument("--checkpoint", required=True, type=Path, help="trained checkpoint")
    p.add_argument("--input", required=True, type=Path, help="input photo (PNG)")
    p.add_argument("--mask", type=Path, help="silhouette mask PNG; defaults to the input alpha")
    p.add_argument("--attribute", required=True, type=float, help="target attribute in [0,1]")
    p.add_argument("--output", required=True, type=Path, help="edited PNG to write")

    p = sub.add_parser("serve", help="start the inference HTTP service", formatter_class=_formatter)
    p.add_argument("--checkpoint", required=True, type=Path, help="trained checkpoint")
    p.add_argument("--port", type=int, default=8089, help="listen port")
    p.add_argument("--host", default="127.0.0.1", help="bind address")

    return parser


def _cmd_generate_data(args) -> int:
    config, _ = parse_config(None, [f"seed={args.seed}", f"image_size={args.image_size}",
                                    f"attribute={args.attribute}"])
    _echo_config(config)
    manifest = generate_proxy_dataset(
        args.samples, args.out, np.random.default_rng(config.seed),
        image_size=config.image_size, attribute=config.attribute,
    )
    print(f"wrote {len(manifest)} samples to {args.out}")
    return 0


def _cmd_train(args) -> int:
    config, aug = parse_config(args.config, args.overrides)
    _echo_config(config, aug)
    manifest = load_manifest(args.data, attribute=config.attribute)
    final = train(config, manifest, args.out, resume_from=args.resume, aug_config=aug)
    print(f"final checkpoint: {final}")
    return 0


def _cmd_eval(args) -> int:
    from .metrics import evaluate_dataset
    from .trainer import load_checkpoint

    state = load_checkpoint(args.checkpoint)
    _echo_config(state.config)
    manifest = load_manifest(args.manifest, attribute=state.config.attribute)
    mean = evaluate_dataset(state.gen, manifest, out_csv=args.out)
    print(f"mean over {len(manifest)} samples: psnr={mean.psnr} ssim={mean.ssim:.6f} "
          f"mse={mean.mse:.6f} mae={mean.mae:.6f}")
    return 0


def _cmd_edit(args) -> int:
    from PIL import Image

    from .editing import ModelBundle, edit_array, mask_from_array

    if not 0.0 <= args.attribute <= 1.0:
        print(f"error: --attribute must lie in [0,1], got {args.attribute}", file=sys.stderr)
        return 2
    bundle = ModelBundle(args.checkpoint)
    _echo_config(bundle.config)
    with Image.open(args.input) as img:
        rgba = np.asarray(img.convert("RGBA"), dtype=np.uint8)
    if args.mask is not None:
        with Image.open(args.mask) as img:
            mask = mask_from_array(np.asarray(img, dtype=np.uint8))
    else:
        mask = mask_from_array(rgba)
    edited = edit_array(bundle.generator, rgba[..., :3], mask, args.attribute)
    Image.fromarray(np.dstack([edited, rgba[..., 3]])).save(args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_serve(args) -> int:
    from .editing import ModelBundle  # fail fast on a bad checkpoint
    from .service import run_server

    bundle = ModelBundle(args.checkpoint)
    _echo_config(bundle.config)
    run_server(args.checkpoint, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "generate-data": _cmd_generate_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "edit": _cmd_edit,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AttriforgeError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
