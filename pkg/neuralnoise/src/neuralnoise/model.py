"""The synthesizer network.

A stack of dilated causal convolutions with gated activations, residual and
skip paths, and per-layer 1x1 conditioning injection; the head emits
mixture-of-logistics parameters for every sample position. Dilations double
per layer, so the receptive field is 1 + (kernel - 1) * sum(dilations),
which the default stack of ten kernel-2 layers makes exactly 1024 samples.

Two evaluation paths share the same weights:

* forward(): parallel over a whole segment, for training and probes. The
  input is shifted right one sample internally, so the parameters at
  position t describe the distribution of x[t] given x[<t] and the
  conditioning row at t.
* GenerationState.step(): one sample at a time with per-layer ring buffers
  holding the dilated history, for autoregressive synthesis. Buffers start
  at zero, matching forward()'s zero padding, so teacher-forced stepping
  reproduces the parallel parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn

MIN_RECEPTIVE_FIELD = 1024


@dataclass(frozen=True)
class SynthConfig:
    layers: int = 10
    residual_channels: int = 32
    skip_channels: int = 64
    cond_embed_channels: int = 32
    conditioning_bins: int = 451
    mol_components: int = 10
    kernel_size: int = 2

    def __post_init__(self):
        for name in ("layers", "residual_channels", "skip_channels",
                     "cond_embed_channels", "conditioning_bins", "mol_components"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.kernel_size < 2:
            raise ValueError("kernel_size must be at least 2")
        if self.receptive_field < MIN_RECEPTIVE_FIELD:
            raise ValueError(
                f"receptive field {self.receptive_field} is below the required "
                f"{MIN_RECEPTIVE_FIELD} samples; deepen the stack"
            )

    @property
    def dilations(self) -> tuple[int, ...]:
        return tuple(2 ** i for i in range(self.layers))

    @property
    def receptive_field(self) -> int:
        return 1 + (self.kernel_size - 1) * sum(self.dilations)

    @property
    def param_channels(self) -> int:
        return 3 * self.mol_components


class SynthModel(nn.Module):
    def __init__(self, config: SynthConfig):
        super().__init__()
        self.config = config
        r, s, e = config.residual_channels, config.skip_channels, config.cond_embed_channels

        self.input_conv = nn.Conv1d(1, r, 1)
        self.cond_embed = nn.Conv1d(config.conditioning_bins, e, 1)
        self.dilated = nn.ModuleList(
            nn.Conv1d(r, 2 * r, config.kernel_size, dilation=d) for d in config.dilations
        )
        self.cond_proj = nn.ModuleList(
            nn.Conv1d(e, 2 * r, 1, bias=False) for _ in config.dilations
        )
        self.res_proj = nn.ModuleList(nn.Conv1d(r, r, 1) for _ in config.dilations)
        self.skip_proj = nn.ModuleList(nn.Conv1d(r, s, 1) for _ in config.dilations)
        self.head = nn.Sequential(
            nn.ReLU(), nn.Conv1d(s, s, 1),
            nn.ReLU(), nn.Conv1d(s, config.param_channels, 1),
        )

    def embed_conditioning(self, cond: torch.Tensor) -> torch.Tensor:
        """(B, bins, T) -> (B, embed, T)."""
        if cond.shape[-2] != self.config.conditioning_bins:
            raise ValueError(
                f"expected {self.config.conditioning_bins} conditioning bins, "
                f"got {cond.shape[-2]}"
            )
        return self.cond_embed(cond)

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        """x (B, T) in [-1, 1], cond (B, bins, T) -> MoL params (B, T, 3K)."""
        if x.shape[-1] != cond.shape[-1]:
            raise ValueError("audio and conditioning lengths differ")
        shifted = F.pad(x, (1, 0))[:, :-1].unsqueeze(1)
        h = self.input_conv(shifted)
        e = self.embed_conditioning(cond)

        skips = torch.zeros(
            x.shape[0], self.config.skip_channels, x.shape[-1],
            dtype=h.dtype, device=h.device,
        )
        pad = (self.config.kernel_size - 1)
        for conv, c_proj, r_proj, s_proj, d in zip(
            self.dilated, self.cond_proj, self.res_proj, self.skip_proj,
            self.config.dilations,
        ):
            z = conv(F.pad(h, (pad * d, 0))) + c_proj(e)
            a, b = z.chunk(2, dim=1)
            g = torch.tanh(a) * torch.sigmoid(b)
            skips = skips + s_proj(g)
            h = h + r_proj(g)
        return self.head(skips).transpose(1, 2)

    def step_state(self, batch: int = 1) -> "GenerationState":
        return GenerationState(self, batch)


@dataclass
class _RingBuffer:
    """Fixed-depth history of one layer's inputs, oldest slot first."""

    data: torch.Tensor  # (B, channels, depth)
    index: int = 0

    def exchange(self, value: torch.Tensor) -> torch.Tensor:
        """Return the value depth steps back and store the new one."""
        past = self.data[:, :, self.index].clone()
        self.data[:, :, self.index] = value
        self.index = (self.index + 1) % self.data.shape[-1]
        return past

    def select(self, perm: torch.Tensor) -> None:
        self.data = self.data[perm]


class GenerationState(torch.nn.Module):
    """Incremental evaluator for autoregressive synthesis.

    Supports kernel size 2 only, which is all the shipped configs use; the
    parallel forward() handles arbitrary kernels.
    """

    def __init__(self, model: SynthModel, batch: int):
        super().__init__()
        if model.config.kernel_size != 2:
            raise ValueError("incremental generation supports kernel_size 2 only")
        self.model = model
        self.batch = batch
        r = model.config.residual_channels
        self.buffers_ = [
            _RingBuffer(torch.zeros(batch, r, d)) for d in model.config.dilations
        ]

    @torch.no_grad()
    def step(self, x_prev: torch.Tensor, e_t: torch.Tensor) -> torch.Tensor:
        """One sample step.

        x_prev: (B,) previously generated sample (zeros at t = 0).
        e_t: (1 or B, embed, 1) embedded conditioning row for this position.
        Returns MoL params (B, 3K).
        """
        m = self.model
        h = m.input_conv(x_prev.reshape(self.batch, 1, 1))
        skips = None
        for conv, c_proj, r_proj, s_proj, buf in zip(
            m.dilated, m.cond_proj, m.res_proj, m.skip_proj, self.buffers_,
        ):
            past = buf.exchange(h[:, :, 0])
            pair = torch.stack([past, h[:, :, 0]], dim=-1)
            z = F.conv1d(pair, conv.weight, conv.bias) + c_proj(e_t)
            a, b = z.chunk(2, dim=1)
            g = torch.tanh(a) * torch.sigmoid(b)
            s = s_proj(g)
            skips = s if skips is None else skips + s
            h = h + r_proj(g)
        return m.head(skips)[:, :, 0]

    def select_beams(self, perm: torch.Tensor) -> None:
        """Reorder the batch dimension, keeping survivors' histories."""
        for buf in self.buffers_:
            buf.select(perm)
