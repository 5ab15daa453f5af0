"""Mixture-of-logistics output distribution.

The network emits 3*K channels per sample: K mixture logits, K component
means, K log scales, in that order. Training maximizes the continuous
mixture density of the float waveform; sampling draws a component, draws a
logistic variate, then clamps and quantizes onto the 16-bit grid, so every
generated sample is an exact k / 32768.
"""

from __future__ import annotations

import torch

LOG_SCALE_FLOOR = -7.0


def split_params(params: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Split a (..., 3K) parameter tensor into (logits, means, log_scales)."""
    if params.shape[-1] % 3 != 0:
        raise ValueError(f"parameter dimension {params.shape[-1]} is not divisible by 3")
    k = params.shape[-1] // 3
    return params[..., :k], params[..., k:2 * k], params[..., 2 * k:]


def mol_log_prob(params: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """Log density of x under the mixture; shapes broadcast over (...)."""
    logits, means, log_scales = split_params(params)
    log_scales = torch.clamp(log_scales, min=LOG_SCALE_FLOOR)
    z = (x.unsqueeze(-1) - means) * torch.exp(-log_scales)
    # log of the logistic pdf: -z - log s - 2 log(1 + e^-z)
    log_pdf = -z - log_scales - 2.0 * torch.nn.functional.softplus(-z)
    return torch.logsumexp(torch.log_softmax(logits, dim=-1) + log_pdf, dim=-1)


def quantize(x: torch.Tensor) -> torch.Tensor:
    """Snap to the nearest 16-bit PCM level, as a float multiple of 1/32768."""
    q = torch.clamp(torch.floor(x * 32768.0 + 0.5), -32768.0, 32767.0)
    return q / 32768.0


def sample_mol_batch(params: torch.Tensor, generator: torch.Generator) -> torch.Tensor:
    """Draw one quantized sample per row of a (B, 3K) parameter tensor."""
    logits, means, log_scales = split_params(params)
    probs = torch.softmax(logits, dim=-1)
    idx = torch.multinomial(probs, 1, generator=generator)
    mean = means.gather(-1, idx).squeeze(-1)
    scale = torch.exp(log_scales.gather(-1, idx).squeeze(-1))
    u = torch.rand(mean.shape, generator=generator, dtype=params.dtype)
    u = torch.clamp(u, 1e-7, 1.0 - 1e-7)
    return quantize(mean + scale * (torch.log(u) - torch.log1p(-u)))


def sample_mol(params: torch.Tensor, seed: int | torch.Generator) -> int:
    """Draw a single 16-bit sample value from per-sample MoL parameters."""
    if isinstance(seed, torch.Generator):
        generator = seed
    else:
        generator = torch.Generator()
        generator.manual_seed(int(seed))
    value = sample_mol_batch(params.reshape(1, -1), generator)[0]
    return int(torch.round(value * 32768.0).item())
