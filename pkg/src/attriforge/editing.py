"""Single-image editing pipeline shared by the CLI and the HTTP service.

Arbitrary-resolution photos are downscaled to the model's input size for
inference and the edit is composited back at the original resolution, so
background bytes are carried over from the input untouched.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import cv2
import numpy as np
import torch

from .errors import DomainError
from .networks import Generator
from .trainer import TrainerState, load_checkpoint


def checkpoint_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def mask_from_array(arr: np.ndarray) -> np.ndarray:
    """Binary [H,W] mask from a decoded image: alpha channel when present,
    otherwise luminance > 50%."""
    if arr.ndim == 3 and arr.shape[2] == 4:
        return arr[..., 3] > 127
    gray = arr if arr.ndim == 2 else arr[..., :3].mean(axis=2)
    return gray > 127


def edit_array(gen: Generator, rgb: np.ndarray, mask: np.ndarray, attribute: float) -> np.ndarray:
    """Edit one uint8 [H,W,3] image inside `mask` ([H,W] bool); returns uint8.

    Background pixels of the result are byte-identical to the input.
    """
    if not 0.0 <= attribute <= 1.0:
        raise DomainError(f"attribute {attribute} outside [0,1]")
    if rgb.shape[:2] != mask.shape:
        raise DomainError(f"image {rgb.shape[:2]} and mask {mask.shape} disagree")
    size = gen.image_size
    h, w = rgb.shape[:2]

    small_mask = cv2.resize(mask.astype(np.uint8), (size, size), interpolation=cv2.INTER_NEAREST) > 0
    small = cv2.resize(
        rgb, (size, size), interpolation=cv2.INTER_AREA if size < min(h, w) else cv2.INTER_LINEAR
    )
    x = small.astype(np.float32) / 255.0 * 2.0 - 1.0
    x *= small_mask[..., None]

    was_training = gen.training
    gen.eval()
    try:
        with torch.no_grad():
            y = gen(torch.from_numpy(x.transpose(2, 0, 1)), attribute).numpy()
    finally:
        gen.train(was_training)
    y = (y.transpose(1, 2, 0) + 1.0) * 0.5
    y_full = cv2.resize(y, (w, h), interpolation=cv2.INTER_LINEAR)
    edited = np.rint(np.clip(y_full, 0.0, 1.0) * 255.0).astype(np.uint8)
    return np.where(mask[..., None], edited, rgb)


class ModelBundle:
    """One loaded checkpoint pinned for inference."""

    def __init__(self, checkpoint_path: Path):
        state: TrainerState = load_checkpoint(checkpoint_path)
        self.generator = state.gen
        self.generator.eval()
        for p in self.generator.parameters():
            p.requires_grad_(False)
        self.config = state.config
        self.step = state.step
        self.checkpoint_id = checkpoint_digest(checkpoint_path)
        self.attribute_name = state.config.attribute
