"""Image-quality metrics over the object mask: PSNR, SSIM, MSE, MAE.

Inputs are expected in [0,1]. MSE and MAE run over masked pixels only;
SSIM uses the standard 11x11 Gaussian window (sigma 1.5) with constants
C1=(0.01)^2, C2=(0.03)^2, averaged over masked window centers whose window
fits fully inside the image. A perfect match reports PSNR as +inf
(serialized as the string "inf").
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    mse: float
    mae: float
    n_pixels: int


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2
    g = np.exp(-((np.arange(size) - half) ** 2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_channel(x: np.ndarray, y: np.ndarray, window: np.ndarray) -> np.ndarray:
    """SSIM map over all valid (fully interior) window centers of one channel."""
    k = window.shape[0]
    xs = np.lib.stride_tricks.sliding_window_view(x, (k, k))
    ys = np.lib.stride_tricks.sliding_window_view(y, (k, k))
    mu_x = np.tensordot(xs, window, axes=([2, 3], [0, 1]))
    mu_y = np.tensordot(ys, window, axes=([2, 3], [0, 1]))
    var_x = np.tensordot(xs * xs, window, axes=([2, 3], [0, 1])) - mu_x**2
    var_y = np.tensordot(ys * ys, window, axes=([2, 3], [0, 1])) - mu_y**2
    cov = np.tensordot(xs * ys, window, axes=([2, 3], [0, 1])) - mu_x * mu_y
    num = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return num / den


def evaluate_pair(reference: np.ndarray, candidate: np.ndarray, mask: np.ndarray) -> MetricReport:
    """All four metrics between two [C,H,W] images in [0,1], inside the mask."""
    ref = np.asarray(reference, dtype=np.float64)
    cand = np.asarray(candidate, dtype=np.float64)
    if ref.shape != cand.shape:
        raise DomainError(f"shape mismatch: {ref.shape} vs {cand.shape}")
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim == 3:
        m = m[0]
    m = m > 0.5
    n_pixels = int(m.sum())
    if n_pixels == 0:
        raise DomainError("empty mask: no pixels to evaluate")

    diff = ref - cand
    mse = float((diff[:, m] ** 2).mean())
    mae = float(np.abs(diff[:, m]).mean())
    psnr = math.inf if mse == 0 else 10.0 * math.log10(1.0 / mse)

    half = SSIM_WINDOW // 2
    if ref.shape[1] < SSIM_WINDOW or ref.shape[2] < SSIM_WINDOW:
        raise DomainError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    center_mask = m[half:-half, half:-half]
    if not center_mask.any():
        raise DomainError("mask has no interior pixels for SSIM window centers")
    window = _gaussian_window()
    ssim_vals = [
        float(_ssim_channel(ref[c], cand[c], window)[center_mask].mean()) for c in range(ref.shape[0])
    ]
    return MetricReport(psnr=psnr, ssim=float(np.mean(ssim_vals)), mse=mse, mae=mae, n_pixels=n_pixels)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def write_metric_csv(rows: list[tuple[str, MetricReport]], mean: MetricReport, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "psnr", "ssim", "mse", "mae"])
        for sample_id, r in rows:
            writer.writerow([sample_id, _fmt(r.psnr), _fmt(r.ssim), _fmt(r.mse), _fmt(r.mae)])
        writer.writerow(["MEAN", _fmt(mean.psnr), _fmt(mean.ssim), _fmt(mean.mse), _fmt(mean.mae)])


def aggregate_reports(reports: list[MetricReport]) -> MetricReport:
    return MetricReport(
        psnr=float(np.mean([r.psnr for r in reports])),
        ssim=float(np.mean([r.ssim for r in reports])),
        mse=float(np.mean([r.mse for r in reports])),
        mae=float(np.mean([r.mae for r in reports])),
        n_pixels=int(np.sum([r.n_pixels for r in reports])),
    )


def evaluate_dataset(model, manifest, out_csv: Optional[Path] = None) -> MetricReport:
    """Reconstruction protocol: edit every sample back to its source attribute
    and score it against the input; arithmetic means over samples.

    `model` is a generator in eval mode; samples are resized to its input
    resolution. Saves a per-sample CSV with a final MEAN row when `out_csv`
    is given.
    """
    import torch

    from .data import apply_mask, load_sample, resize_sample

    if len(manifest.records) == 0:
        raise DomainError("manifest holds no samples")
    rows = []
    size = model.image_size
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            for i, record in enumerate(manifest.records):
                sample = resize_sample(load_sample(manifest, i), size)
                x = torch.from_numpy(sample.image)
                y = model(x, sample.att_source).numpy()
                y = apply_mask(y, sample.mask)
                report = evaluate_pair(
                    (sample.image + 1.0) * 0.5, (y + 1.0) * 0.5, sample.mask
                )
                rows.append((Path(record["image"]).stem, report))
    finally:
        model.train(was_training)
    mean = aggregate_reports([r for _, r in rows])
    if out_csv is not None:
        write_metric_csv(rows, mean, out_csv)
    return mean
