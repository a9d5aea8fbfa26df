"""Adam with global-norm gradient clipping and an inverse-sqrt warmup schedule."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, NumericError


def warmup_lr(step: int, warmup_steps: int = 2000, d_model: float = 1e5) -> float:
    """Learning rate at a 1-based step: d^-0.5 * min(step^-0.5, step * warmup^-1.5).

    Rises linearly to the peak at step == warmup_steps, then decays as the
    inverse square root of the step count.
    """
    if step < 1:
        raise ConfigError(f"warmup schedule is defined for step >= 1, got {step}")
    return d_model**-0.5 * min(step**-0.5, step * warmup_steps**-1.5)


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_by_global_norm(grads: dict[str, np.ndarray], threshold: float) -> float:
    """Scale all gradients in place so their joint norm is at most threshold.

    Returns the pre-clip norm. NaN/inf gradients abort with diagnostics.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name!r}; training aborted")
    norm = global_norm(grads)
    if threshold > 0 and norm > threshold:
        scale = threshold / norm
        for g in grads.values():
            g *= scale
    return norm


class AdamState:
    """Per-tensor first/second moment accumulators and the shared step counter."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        """Bias-corrected Adam update, in place on the parameter arrays."""
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, p in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if not np.all(np.isfinite(p)):
                raise NumericError(f"non-finite parameter {name!r} after Adam step {t}")

    def tensors(self) -> dict[str, np.ndarray]:
        """Flat view of the optimizer state for checkpointing."""
        out = {}
        for k in self.m:
            out[f"adam_m_{k}"] = self.m[k]
            out[f"adam_v_{k}"] = self.v[k]
        return out
