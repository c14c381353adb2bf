"""Generator and dual-branch discriminator.

Generator: 5 strided conv encoder layers (each halves the spatial dims),
5 upsample+conv decoder layers, and 4 selective-transfer cells on the skip
connections. The decoder deliberately contains no transpose convolutions;
every resolution step is a nearest-neighbor upsample followed by a plain
convolution.

Discriminator: 5-layer conv trunk shared by two fully connected heads; the
adversarial head emits an unbounded critic score, the attribute head a
sigmoid value in [0,1].
"""

from __future__ import annotations

from typing import Optional, Sequence

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .errors import ConfigurationError, DomainError, NumericError
from .stu import Attribute, STUCell, attribute_plane, inject_attribute, stu_forward, _as_batched

FULL_CHANNELS = (64, 128, 256, 512, 1024)
TINY_CHANNELS = (8, 16, 32, 64, 128)
N_LAYERS = 5
N_STU_CELLS = 4

# Parameter budget of the reference design this architecture follows. Its
# channel widths are unpublished, so our counts are reported beside these
# totals in diagnostics rather than matched.
REFERENCE_PARAMETER_SPLIT = {
    "generator": 13_758_280,
    "discriminator": 19_568_034,
    "total": 33_326_314,
}


def init_weights_(module: nn.Module, generator: Optional[torch.Generator] = None, std: float = 0.02) -> None:
    """Zero-mean Gaussian init for convs and linears; biases and norm shifts zero."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.Linear)):
            with torch.no_grad():
                m.weight.normal_(0.0, std, generator=generator)
                if m.bias is not None:
                    m.bias.zero_()
        elif isinstance(m, (nn.BatchNorm2d, nn.InstanceNorm2d)) and m.affine:
            with torch.no_grad():
                m.weight.fill_(1.0)
                m.bias.zero_()


def _encoder_block(c_in: int, c_out: int, dtype: torch.dtype) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 4, 2, 1, dtype=dtype),
        nn.BatchNorm2d(c_out, dtype=dtype),
        nn.LeakyReLU(0.01),
    )


class _DecoderBlock(nn.Module):
    """Nearest x2 upsample + 3x3 conv; instance norm and ReLU except on output."""

    def __init__(self, c_in: int, c_out: int, dtype: torch.dtype, final: bool = False):
        super().__init__()
        self.conv = nn.Conv2d(c_in, c_out, 3, 1, 1, dtype=dtype)
        self.norm = None if final else nn.InstanceNorm2d(c_out, affine=True, dtype=dtype)
        self.final = final

    def forward(self, x: Tensor) -> Tensor:
        h = self.conv(F.interpolate(x, scale_factor=2, mode="nearest"))
        if self.final:
            return torch.tanh(h)
        return F.relu(self.norm(h))


class Generator(nn.Module):
    def __init__(
        self,
        image_size: int = 256,
        channels: Sequence[int] = FULL_CHANNELS,
        in_channels: int = 3,
        use_stu: bool = True,
        dtype: torch.dtype = torch.float32,
        init_generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        if len(channels) != N_LAYERS:
            raise ConfigurationError(f"expected {N_LAYERS} channel widths, got {len(channels)}")
        if image_size % (2 ** N_LAYERS) != 0:
            raise ConfigurationError(f"image size {image_size} is not divisible by {2 ** N_LAYERS}")
        self.image_size = image_size
        self.channels = tuple(channels)
        self.use_stu = use_stu
        c = list(channels)

        self.encoder = nn.ModuleList(
            [_encoder_block(cin, cout, dtype) for cin, cout in zip([in_channels] + c[:-1], c)]
        )

        # Initial hidden state for the deepest cell: the latent code with the
        # attribute channel appended, fused by one conv (no upsampling here).
        self.latent_fuse = nn.Conv2d(c[4] + 1, c[4], 3, 1, 1, dtype=dtype)
        self.stu_cells = nn.ModuleList(
            [
                STUCell(state_channels=c[l + 1], channels=c[l], layer_index=l + 1, dtype=dtype)
                for l in range(3, -1, -1)  # deepest skip first
            ]
        )

        self.decoder = nn.ModuleList(
            [
                _DecoderBlock(c[4] + 1, c[3], dtype),
                _DecoderBlock(2 * c[3], c[2], dtype),
                _DecoderBlock(2 * c[2], c[1], dtype),
                _DecoderBlock(2 * c[1], c[0], dtype),
                _DecoderBlock(2 * c[0], in_channels, dtype, final=True),
            ]
        )
        init_weights_(self, init_generator)

    def encode(self, x: Tensor) -> tuple[Tensor, list[Tensor]]:
        """Compress the image to the latent code, keeping the four skip maps."""
        xb, squeeze = _as_batched(x)
        if xb.shape[-2:] != (self.image_size, self.image_size):
            raise ConfigurationError(
                f"expected {self.image_size}x{self.image_size} input, got {tuple(xb.shape[-2:])}"
            )
        skips = []
        h = xb
        for block in self.encoder:
            h = block(h)
            skips.append(h)
        z = skips.pop()
        if squeeze:
            return z.squeeze(0), [s.squeeze(0) for s in skips]
        return z, skips

    def edit_skips(self, z: Tensor, skips: list[Tensor], att: Attribute) -> list[Tensor]:
        """Run the selective-transfer chain deepest to shallowest.

        Returns the edited skip maps ordered deepest first.
        """
        s = self.latent_fuse(torch.cat([z, attribute_plane(att, z)], dim=1))
        edited = []
        for cell, f_enc in zip(self.stu_cells, reversed(skips)):
            s_hat = inject_attribute(s, att, cell)
            f_t, s = stu_forward(f_enc, s_hat, cell)
            edited.append(f_t)
        return edited

    def forward(self, x: Tensor, att: Attribute) -> Tensor:
        xb, squeeze = _as_batched(x)
        z, skips = self.encode(xb)
        if self.use_stu:
            edited = self.edit_skips(z, skips, att)
        else:
            # Ablation: raw skip maps, no attribute-conditioned gating.
            edited = list(reversed(skips))
        h = torch.cat([z, attribute_plane(att, z)], dim=1)
        h = self.decoder[0](h)
        for block, f_t in zip(self.decoder[1:], edited):
            h = block(torch.cat([h, f_t], dim=1))
        if not torch.isfinite(h).all():
            raise NumericError("non-finite values in generator output")
        return h.squeeze(0) if squeeze else h


class Discriminator(nn.Module):
    def __init__(
        self,
        image_size: int = 256,
        channels: Sequence[int] = FULL_CHANNELS,
        in_channels: int = 3,
        dtype: torch.dtype = torch.float32,
        init_generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        if len(channels) != N_LAYERS:
            raise ConfigurationError(f"expected {N_LAYERS} channel widths, got {len(channels)}")
        self.image_size = image_size
        c = list(channels)
        self.trunk = nn.ModuleList(
            [_encoder_block(cin, cout, dtype) for cin, cout in zip([in_channels] + c[:-1], c)]
        )
        feat = c[4] * (image_size // 2 ** N_LAYERS) ** 2
        self.adv_head = nn.Linear(feat, 1, dtype=dtype)
        self.att_head = nn.Linear(feat, 1, dtype=dtype)
        init_weights_(self, init_generator)

    def features(self, x: Tensor) -> Tensor:
        xb, _ = _as_batched(x)
        if xb.shape[-2:] != (self.image_size, self.image_size):
            raise ConfigurationError(
                f"expected {self.image_size}x{self.image_size} input, got {tuple(xb.shape[-2:])}"
            )
        h = xb
        for block in self.trunk:
            h = block(h)
        return h.flatten(1)

    def adv_score(self, x: Tensor) -> Tensor:
        """Critic score alone; this is the branch the gradient penalty differentiates."""
        return self.adv_head(self.features(x)).squeeze(1)

    def forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        feat = self.features(x)
        adv = self.adv_head(feat).squeeze(1)
        att = torch.sigmoid(self.att_head(feat)).squeeze(1)
        if not (torch.isfinite(adv).all() and torch.isfinite(att).all()):
            raise NumericError("non-finite discriminator outputs")
        return adv, att


def count_parameters(module: nn.Module) -> list[tuple[str, int]]:
    """Trainable parameter count per immediate submodule, plus the total.

    A module without children is reported as a single row under its class name.
    """
    rows = []
    children = list(module.named_children())
    if not children:
        children = [(type(module).__name__, module)]
    for name, child in children:
        n = sum(p.numel() for p in child.parameters() if p.requires_grad)
        rows.append((name, n))
    rows.append(("Total Parameters", sum(n for _, n in rows)))
    return rows


def format_parameter_table(rows: list[tuple[str, int]], title: str = "") -> str:
    width = max(len(name) for name, _ in rows)
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'Module':<{width}} | Trainable Parameters")
    lines.append("-" * (width + 24))
    for name, n in rows:
        lines.append(f"{name:<{width}} | {n:,}".replace(",", " "))
    return "\n".join(lines)


def parameter_report(gen: Generator, disc: Discriminator) -> str:
    """Diagnostics comparing this build's parameter counts to the reference budget."""
    g_total = count_parameters(gen)[-1][1]
    d_total = count_parameters(disc)[-1][1]
    ref = REFERENCE_PARAMETER_SPLIT
    lines = [
        format_parameter_table(count_parameters(gen), "Generator"),
        "",
        format_parameter_table(count_parameters(disc), "Discriminator"),
        "",
        f"{'Module':<16} | {'This build':>12} | {'Reference':>12}",
        "-" * 48,
        f"{'generator':<16} | {g_total:>12,} | {ref['generator']:>12,}".replace(",", " "),
        f"{'discriminator':<16} | {d_total:>12,} | {ref['discriminator']:>12,}".replace(",", " "),
        f"{'total':<16} | {g_total + d_total:>12,} | {ref['total']:>12,}".replace(",", " "),
    ]
    return "\n".join(lines)
