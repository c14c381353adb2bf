"""Selective Transfer Unit: gated editing cell for encoder-decoder skip connections.

A cell sits on one skip connection. It receives the hidden state of the
deeper cell, doubles its resolution while injecting the target attribute,
and then gates the encoder feature map against that state (GRU-style):

    s_hat = conv_t(upsample2(s_prev) ++ att)        attribute injection
    u     = sigmoid(conv_u(f_enc ++ s_hat))         update gate
    r     = sigmoid(conv_r(f_enc ++ s_hat))         reset gate
    s     = r * s_hat                               hidden state passed on
    cand  = tanh(conv_h(f_enc ++ s))                candidate feature map
    f_t   = (1 - u) * s_hat + u * cand              edited feature map

`++` is channel concatenation; the attribute is a scalar in [0,1] tiled
into one constant channel.
"""

from __future__ import annotations

from typing import Callable, Optional, Union

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .errors import ConfigurationError, DomainError, NumericError

Attribute = Union[float, Tensor]


class STUCell(nn.Module):
    """Parameters of one selective transfer cell.

    state_channels: channels of the incoming hidden state (the deeper layer).
    channels: feature-map channels at this skip level; gates, candidate and
        outputs all use this width.
    """

    def __init__(
        self,
        state_channels: int,
        channels: int,
        kernel_size: int = 3,
        layer_index: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        pad = kernel_size // 2
        self.layer_index = layer_index
        self.inject = nn.Conv2d(state_channels + 1, channels, kernel_size, 1, pad, dtype=dtype)
        self.update_gate = nn.Conv2d(2 * channels, channels, kernel_size, 1, pad, dtype=dtype)
        self.reset_gate = nn.Conv2d(2 * channels, channels, kernel_size, 1, pad, dtype=dtype)
        self.candidate = nn.Conv2d(2 * channels, channels, kernel_size, 1, pad, dtype=dtype)

    def forward(self, f_enc: Tensor, s_hat: Tensor, hook: Optional[Callable] = None):
        return stu_forward(f_enc, s_hat, self, hook=hook)


def _as_batched(x: Tensor) -> tuple[Tensor, bool]:
    if x.dim() == 3:
        return x.unsqueeze(0), True
    if x.dim() == 4:
        return x, False
    raise ConfigurationError(f"expected a [C,H,W] or [B,C,H,W] tensor, got shape {tuple(x.shape)}")


def attribute_plane(att: Attribute, like: Tensor) -> Tensor:
    """One constant channel per sample holding the attribute value.

    Differentiable in `att` when it is a tensor. Accepts a python float, a
    0-d tensor, or a per-sample [B] tensor.
    """
    b, _, h, w = like.shape
    if not torch.is_tensor(att):
        att = torch.tensor(float(att), dtype=like.dtype, device=like.device)
    att = att.to(dtype=like.dtype, device=like.device)
    bad = (att.detach() < 0).any() or (att.detach() > 1).any()
    if bad:
        raise DomainError(f"attribute value outside [0,1]: {att.detach().flatten().tolist()}")
    if att.dim() == 0:
        att = att.reshape(1).expand(b)
    if att.shape != (b,):
        raise ConfigurationError(f"attribute batch {tuple(att.shape)} does not match batch size {b}")
    return att.view(b, 1, 1, 1).expand(b, 1, h, w)


def inject_attribute(s_prev: Tensor, att: Attribute, cell: STUCell) -> Tensor:
    """Upsample the deeper hidden state x2, tile the attribute in, convolve.

    Output spatial dims are exactly twice those of `s_prev`.
    """
    s, squeeze = _as_batched(s_prev)
    if s.shape[1] + 1 != cell.inject.in_channels:
        raise ConfigurationError(
            f"hidden state has {s.shape[1]} channels but injection conv expects "
            f"{cell.inject.in_channels - 1} (+1 attribute channel)"
        )
    up = F.interpolate(s, scale_factor=2, mode="nearest")
    out = cell.inject(torch.cat([up, attribute_plane(att, up)], dim=1))
    return out.squeeze(0) if squeeze else out


def _require_finite(layer_index: int, **tensors: Tensor) -> None:
    for name, t in tensors.items():
        if not torch.isfinite(t).all():
            raise NumericError(f"non-finite values in '{name}' of STU cell at layer {layer_index}")


def stu_forward(
    f_enc: Tensor,
    s_hat: Tensor,
    cell: STUCell,
    hook: Optional[Callable] = None,
) -> tuple[Tensor, Tensor]:
    """Gate the encoder feature map against the injected hidden state.

    Returns (edited feature map, hidden state for the next cell). `hook`,
    when given, is called with the internal tensors (update, reset,
    candidate) for inspection.
    """
    f, squeeze = _as_batched(f_enc)
    s, _ = _as_batched(s_hat)
    if f.shape[-2:] != s.shape[-2:]:
        raise ConfigurationError(
            f"feature map {tuple(f.shape[-2:])} and hidden state {tuple(s.shape[-2:])} "
            f"disagree on spatial dims at layer {cell.layer_index}"
        )
    both = torch.cat([f, s], dim=1)
    u_pre = cell.update_gate(both)
    r_pre = cell.reset_gate(both)
    u = torch.sigmoid(u_pre)
    r = torch.sigmoid(r_pre)
    state = r * s
    cand_pre = cell.candidate(torch.cat([f, state], dim=1))
    cand = torch.tanh(cand_pre)
    out = (1.0 - u) * s + u * cand
    _require_finite(
        cell.layer_index,
        update_preactivation=u_pre,
        reset_preactivation=r_pre,
        candidate_preactivation=cand_pre,
        hidden_state=state,
        output=out,
    )
    if hook is not None:
        hook(update=u, reset=r, candidate=cand)
    if squeeze:
        return out.squeeze(0), state.squeeze(0)
    return out, state
