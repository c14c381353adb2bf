"""Dataset handling: masked image samples, the augmentation pipeline,
attribute pooling, and a procedural shaded-object dataset that stands in
for a crowd-rated corpus.

Images live in [-1,1] as float32 [3,H,W] arrays; masks are binary
[1,H,W]. On disk a sample is one 8-bit RGBA PNG with the silhouette mask
in the alpha channel. A dataset is a directory of PNGs plus a JSON-lines
manifest, one record per sample:

    {"image": ..., "mask": ..., "attributes": {name: value}, "meta": {...}}

The proxy "glossy" label is a fixed monotone map of the analytic specular
parameters. It is a physical stand-in sufficient for verifying the editing
mechanism; it makes no claim of perceptual fidelity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import cv2
import numpy as np
from PIL import Image

from .errors import ConfigurationError, DomainError

# 7 fixed light directions (x, y, z toward the viewer), normalized at use.
LIGHT_DIRECTIONS = np.array(
    [
        (0.0, 0.0, 1.0),
        (0.6, 0.3, 0.74),
        (-0.6, 0.3, 0.74),
        (0.4, -0.5, 0.77),
        (-0.4, -0.5, 0.77),
        (0.8, 0.0, 0.6),
        (0.0, 0.75, 0.66),
    ],
    dtype=np.float64,
)

# 5 slight viewpoint variations: (center dx, center dy, radius scale).
VIEWPOINTS = np.array(
    [
        (0.0, 0.0, 1.0),
        (0.08, 0.04, 0.96),
        (-0.08, 0.05, 1.04),
        (0.05, -0.09, 1.0),
        (-0.06, -0.06, 0.92),
    ],
    dtype=np.float64,
)

# Silhouette exponents: index 0 is a sphere, the rest are superellipsoids.
SHAPE_EXPONENTS = (2.0, 2.8, 4.0, 1.6)


@dataclass(frozen=True)
class SampleMeta:
    shape: int = 0
    illum: int = 0
    material: int = 0
    view: int = 0


@dataclass
class ImageSample:
    image: np.ndarray  # float32 [3,H,W] in [-1,1], zero outside the mask
    mask: np.ndarray  # float32 [1,H,W] in {0,1}
    att_source: float
    meta: SampleMeta = field(default_factory=SampleMeta)

    def __post_init__(self):
        if not 0.0 <= self.att_source <= 1.0:
            raise DomainError(f"source attribute {self.att_source} outside [0,1]")


@dataclass
class AugmentationConfig:
    resize_to: int = 512
    crop_to: int = 480
    final_size: int = 256
    hue_shift_max: float = 18.0  # degrees
    sat_shift_max: float = 0.3  # scale factor range [1-x, 1+x]
    enable_flip: bool = True
    enable_rotate: bool = True
    enable_crop: bool = True
    enable_color: bool = True

    def __post_init__(self):
        if not self.crop_to <= self.resize_to:
            raise ConfigurationError(f"crop_to {self.crop_to} exceeds resize_to {self.resize_to}")
        if not self.final_size <= self.crop_to:
            raise ConfigurationError(f"final_size {self.final_size} exceeds crop_to {self.crop_to}")


@dataclass
class DatasetManifest:
    root: Path
    records: list[dict]
    attribute: str

    def __len__(self) -> int:
        return len(self.records)


def apply_mask(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Zero every background pixel."""
    return image * (mask > 0.5)


def composite(edited: np.ndarray, original: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Edited object over the original background."""
    m = mask > 0.5
    return edited * m + original * ~m


def pool_attribute(ratings: Sequence[float]) -> float:
    """Median of the per-viewpoint ratings (mean of the two central values
    for even counts)."""
    if len(ratings) == 0:
        raise DomainError("cannot pool an empty rating list")
    arr = np.asarray(ratings, dtype=np.float64)
    if arr.min() < 0 or arr.max() > 1:
        raise DomainError("ratings must lie in [0,1]")
    return float(np.median(arr))


def glossiness_label(specular_weight: float, shininess: float) -> float:
    """Monotone map from normalized specular parameters to the proxy label.

    Zero specular weight means no highlight regardless of lobe width, so the
    label vanishes there; at full weight the lobe width lifts the label from
    0.5 to 1.
    """
    if not (0 <= specular_weight <= 1 and 0 <= shininess <= 1):
        raise DomainError("specular parameters must be normalized to [0,1]")
    return float(np.clip(specular_weight * (0.5 + 0.5 * shininess), 0.0, 1.0))


# --------------------------------------------------------------------------
# PNG round trip
# --------------------------------------------------------------------------


def save_sample_png(image: np.ndarray, mask: np.ndarray, path: Path) -> None:
    """Write one RGBA PNG: color from [-1,1], silhouette in alpha."""
    rgb = np.clip((image + 1.0) * 0.5, 0.0, 1.0)
    rgba = np.empty((image.shape[1], image.shape[2], 4), dtype=np.uint8)
    rgba[..., :3] = np.rint(rgb * 255.0).transpose(1, 2, 0)
    rgba[..., 3] = np.rint(np.clip(mask[0], 0.0, 1.0) * 255.0)
    Image.fromarray(rgba, mode="RGBA").save(path)


def load_image_png(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a PNG into ([-1,1] float image, binary mask).

    RGBA alpha becomes the mask; plain RGB gets a full-ones mask. The image
    is re-masked on load so the zero-background invariant holds exactly.
    """
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGBA"), dtype=np.uint8)
    rgb = arr[..., :3].astype(np.float32) / 255.0 * 2.0 - 1.0
    mask = (arr[..., 3] > 127).astype(np.float32)[None]
    image = rgb.transpose(2, 0, 1) * mask
    return image.astype(np.float32), mask


def load_sample(manifest: DatasetManifest, index: int) -> ImageSample:
    record = manifest.records[index]
    image, mask = load_image_png(manifest.root / record["image"])
    return ImageSample(
        image=image,
        mask=mask,
        att_source=float(record["attributes"][manifest.attribute]),
        meta=SampleMeta(**record["meta"]),
    )


# --------------------------------------------------------------------------
# Augmentation
# --------------------------------------------------------------------------


def _resize(hwc: np.ndarray, size: int, nearest: bool = False) -> np.ndarray:
    interp = cv2.INTER_NEAREST if nearest else (
        cv2.INTER_AREA if size < hwc.shape[0] else cv2.INTER_LINEAR
    )
    return cv2.resize(np.ascontiguousarray(hwc), (size, size), interpolation=interp)


def shift_hue_saturation(
    image: np.ndarray, mask: np.ndarray, hue_deg: float, sat_scale: float
) -> np.ndarray:
    """Shift hue (circular, degrees) and scale saturation on object pixels only.

    `image` is float32 [3,H,W] in [-1,1]; background stays untouched.
    """
    rgb = np.clip((image.transpose(1, 2, 0) + 1.0) * 0.5, 0.0, 1.0).astype(np.float32)
    hsv = cv2.cvtColor(rgb, cv2.COLOR_RGB2HSV)
    hsv[..., 0] = np.mod(hsv[..., 0] + hue_deg, 360.0)
    hsv[..., 1] = np.clip(hsv[..., 1] * sat_scale, 0.0, 1.0)
    shifted = cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB).transpose(2, 0, 1) * 2.0 - 1.0
    keep = mask > 0.5
    return np.where(keep, shifted, image).astype(np.float32)


def augment(sample: ImageSample, rng: np.random.Generator, config: Optional[AugmentationConfig] = None) -> ImageSample:
    """Geometric + color jitter pipeline.

    Order: resize up, random flip, random quarter-turn, random crop, HSV
    shift on object pixels, resize down. The mask rides through every
    geometric stage, and the output is re-masked so background pixels are
    exactly zero for any draw.
    """
    cfg = config or AugmentationConfig()
    img = sample.image.transpose(1, 2, 0)
    msk = sample.mask[0]

    img = _resize(img, cfg.resize_to)
    msk = _resize(msk, cfg.resize_to, nearest=True)

    if cfg.enable_flip and rng.random() < 0.5:
        img, msk = img[:, ::-1], msk[:, ::-1]
    k = int(rng.integers(0, 4)) if cfg.enable_rotate else 0
    if k:
        img, msk = np.rot90(img, k), np.rot90(msk, k)

    margin = cfg.resize_to - cfg.crop_to
    if cfg.enable_crop:
        oy, ox = int(rng.integers(0, margin + 1)), int(rng.integers(0, margin + 1))
    else:
        oy = ox = margin // 2
    img = img[oy : oy + cfg.crop_to, ox : ox + cfg.crop_to]
    msk = msk[oy : oy + cfg.crop_to, ox : ox + cfg.crop_to]

    img = np.ascontiguousarray(img.transpose(2, 0, 1))
    msk = np.ascontiguousarray(msk)[None]
    if cfg.enable_color:
        hue = float(rng.uniform(-cfg.hue_shift_max, cfg.hue_shift_max))
        sat = float(rng.uniform(1.0 - cfg.sat_shift_max, 1.0 + cfg.sat_shift_max))
        img = shift_hue_saturation(img, msk, hue, sat)

    img = _resize(img.transpose(1, 2, 0), cfg.final_size)
    msk = (_resize(msk[0], cfg.final_size, nearest=True) > 0.5).astype(np.float32)[None]
    img = apply_mask(img.transpose(2, 0, 1), msk).astype(np.float32)
    return ImageSample(image=img, mask=msk, att_source=sample.att_source, meta=sample.meta)


def resize_sample(sample: ImageSample, size: int) -> ImageSample:
    """Deterministic resize used when augmentation is disabled."""
    img = _resize(sample.image.transpose(1, 2, 0), size)
    msk = (_resize(sample.mask[0], size, nearest=True) > 0.5).astype(np.float32)[None]
    img = apply_mask(img.transpose(2, 0, 1), msk).astype(np.float32)
    return ImageSample(image=img, mask=msk, att_source=sample.att_source, meta=sample.meta)


# --------------------------------------------------------------------------
# Procedural proxy dataset
# --------------------------------------------------------------------------


def _hsv_to_rgb(h: float, s: float, v: float) -> np.ndarray:
    pix = np.array([[[h, s, v]]], dtype=np.float32)
    return cv2.cvtColor(pix, cv2.COLOR_HSV2RGB)[0, 0].astype(np.float64)


def render_shaded_object(
    image_size: int,
    shape: int,
    illum: int,
    view: int,
    albedo: np.ndarray,
    diffuse_weight: float,
    specular_weight: float,
    shininess: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic Lambertian + specular-lobe shading of a superellipsoid silhouette.

    `specular_weight` and `shininess` are normalized [0,1]; the exponent of
    the lobe grows geometrically with `shininess`. Returns ([3,H,W] image in
    [-1,1] with zero background, [1,H,W] mask).
    """
    p = SHAPE_EXPONENTS[shape]
    dx, dy, scale = VIEWPOINTS[view]
    radius = 0.72 * scale
    coords = (np.arange(image_size) + 0.5) / image_size * 2.0 - 1.0
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    sx = (xx - dx) / radius
    sy = (yy - dy) / radius
    s_val = np.abs(sx) ** p + np.abs(sy) ** p
    inside = s_val <= 1.0
    z = np.power(np.clip(1.0 - s_val, 0.0, None), 1.0 / p)

    # Normal of the implicit surface |x|^p + |y|^p + z^p = 1.
    eps = 1e-9
    nx = np.abs(sx) ** (p - 1.0) * np.sign(sx)
    ny = np.abs(sy) ** (p - 1.0) * np.sign(sy)
    nz = np.clip(z, eps, None) ** (p - 1.0)
    norm = np.sqrt(nx**2 + ny**2 + nz**2) + eps
    normal = np.stack([nx / norm, ny / norm, nz / norm])

    light = LIGHT_DIRECTIONS[illum]
    light = light / np.linalg.norm(light)
    half = light + np.array([0.0, 0.0, 1.0])
    half = half / np.linalg.norm(half)

    n_dot_l = np.clip(np.einsum("chw,c->hw", normal, light), 0.0, None)
    n_dot_h = np.clip(np.einsum("chw,c->hw", normal, half), 0.0, None)
    exponent = 2.0 ** (3.0 + 5.0 * shininess)
    spec = 0.9 * specular_weight * n_dot_h**exponent

    shading = albedo[:, None, None] * (0.12 + diffuse_weight * n_dot_l)[None] + spec[None]
    color = np.clip(shading, 0.0, 1.0) * inside[None]
    image = (color * 2.0 - 1.0) * inside[None]
    return image.astype(np.float32), inside[None].astype(np.float32)


def generate_proxy_dataset(
    n_samples: int,
    out_dir: Path,
    rng: np.random.Generator,
    image_size: int = 256,
    attribute: str = "glossy",
) -> DatasetManifest:
    """Render a labelled dataset of shaded objects and write PNGs + manifest.

    Labels are drawn uniform on [0,1] and inverted through the monotone
    label map to pick the specular parameters, so the label distribution
    covers the range evenly.
    """
    if n_samples < 1:
        raise DomainError(f"n_samples must be >= 1, got {n_samples}")
    out_dir = Path(out_dir)
    try:
        (out_dir / "images").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOError(f"cannot create dataset directory {out_dir}: {exc}") from exc

    records = []
    for i in range(n_samples):
        label = float(rng.uniform())
        shininess = float(rng.uniform(max(0.0, 2.0 * label - 1.0), 1.0))
        specular_weight = label / (0.5 + 0.5 * shininess) if label > 0 else 0.0
        meta = SampleMeta(
            shape=int(rng.integers(0, len(SHAPE_EXPONENTS))),
            illum=int(rng.integers(0, len(LIGHT_DIRECTIONS))),
            material=i,
            view=int(rng.integers(0, len(VIEWPOINTS))),
        )
        albedo = _hsv_to_rgb(float(rng.uniform(0, 360)), float(rng.uniform(0.4, 0.9)), float(rng.uniform(0.35, 0.75)))
        image, mask = render_shaded_object(
            image_size,
            meta.shape,
            meta.illum,
            meta.view,
            albedo,
            diffuse_weight=float(rng.uniform(0.55, 0.85)),
            specular_weight=specular_weight,
            shininess=shininess,
        )
        rel = f"images/sample_{i:05d}.png"
        save_sample_png(image, mask, out_dir / rel)
        records.append(
            {
                "image": rel,
                "mask": rel,
                "attributes": {attribute: round(glossiness_label(specular_weight, shininess), 6)},
                "meta": asdict(meta),
            }
        )

    manifest = DatasetManifest(root=out_dir, records=records, attribute=attribute)
    save_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest


# --------------------------------------------------------------------------
# Manifest I/O
# --------------------------------------------------------------------------


def save_manifest(manifest: DatasetManifest, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in manifest.records:
            fh.write(json.dumps(record) + "\n")


def load_manifest(path: Path, attribute: str = "glossy") -> DatasetManifest:
    path = Path(path)
    root = path.parent
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}:{line_no}: invalid manifest record: {exc}") from exc
            if not (root / record["image"]).exists():
                raise ConfigurationError(f"{path}:{line_no}: missing image file {record['image']}")
            if attribute not in record.get("attributes", {}):
                raise ConfigurationError(
                    f"{path}:{line_no}: sample lacks a rating for attribute '{attribute}'"
                )
            records.append(record)
    return DatasetManifest(root=root, records=records, attribute=attribute)
