"""Exact two-point kernel of the degree-N ensemble.

The normalized kernel between points at distance d is

    P_N(z, w) = |<Z, W>|^N = cos(d)^N,

with constant diagonal Pi_N(z, z) = binom(N+m, m) m! / pi^m.  Everything
here is closed-form arithmetic, valid at any degree, so no degree cap is
enforced (caps belong to sampling and root finding).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedDimension
from .geometry import SUPPORTED_M, ProjectivePoint, normal_frame, random_point


@dataclass(frozen=True)
class KernelContext:
    """Degree and dimension, with the constant kernel diagonal."""

    N: int
    m: int
    diag: float

    @property
    def basis_dim(self) -> int:
        return math.comb(self.N + self.m, self.m)


def kernel_context(N: int, m: int) -> KernelContext:
    if m not in SUPPORTED_M:
        raise UnsupportedDimension(f"m={m} not supported")
    if N < 1:
        raise ValueError("N must be >= 1")
    diag = math.comb(N + m, m) * math.factorial(m) / np.pi ** m
    return KernelContext(N=N, m=m, diag=diag)


def normalized_kernel(ctx: KernelContext, p: ProjectivePoint,
                      q: ProjectivePoint) -> float:
    """P_N(p, q) = |<P, Q>|^N in [0, 1]."""
    t = abs(np.vdot(p.homog, q.homog))
    return float(kernel_of_overlap(ctx, np.asarray(t)))


def kernel_of_overlap(ctx: KernelContext, t: np.ndarray) -> np.ndarray:
    """P_N as a function of the overlap t = |<Z, W>| (vectorized).

    Computed as exp(N log t); underflows to 0 for far pairs, which is the
    correct limit at this scale.
    """
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        return np.exp(ctx.N * np.log(t, where=t > 0,
                                     out=np.full(np.shape(t), -np.inf)))


def kernel_of_distance(ctx: KernelContext, d: np.ndarray) -> np.ndarray:
    """P_N at geodesic distance d = arccos(t)."""
    return kernel_of_overlap(ctx, np.cos(np.asarray(d, dtype=np.float64)))


def far_decay_report(ctx: KernelContext, b: float, n_pairs: int = 64,
                     seed: int = 0) -> dict:
    """Sample pairs at distance b sqrt(log N / N) and bound P_N there.

    Returns the max of P_N * N^(b^2/2) over the pairs; the model satisfies
    P_N <= N^(-b^2/2) at this separation, so the report is <= 1 up to
    roundoff.  Requires the probe distance to stay below pi/2.
    """
    if not 0 < b <= 4:
        raise ValueError("b must lie in (0, 4]")
    N = ctx.N
    d_star = b * math.sqrt(math.log(N) / N)
    if d_star >= np.pi / 2:
        raise ValueError(f"probe distance {d_star:.3f} >= pi/2; increase N")
    rng = np.random.Generator(np.random.Philox(key=seed))
    worst = -np.inf
    for _ in range(n_pairs):
        z = random_point(rng, ctx.m)
        frame = normal_frame(z)
        direction = rng.standard_normal((ctx.m, 2))
        dvec = direction[:, 0] + 1j * direction[:, 1]
        dvec = dvec / np.linalg.norm(dvec)
        w = frame.point_many((math.tan(d_star) * dvec)[None, :])[0]
        t = abs(np.vdot(z.homog, w))
        scaled = math.exp(N * math.log(t) + 0.5 * b * b * math.log(N))
        worst = max(worst, scaled)
    return {"b": b, "N": N, "distance": d_star, "n_pairs": n_pairs,
            "max_scaled": worst}


def near_remainder(ctx: KernelContext, z0: ProjectivePoint, u: np.ndarray,
                   v: np.ndarray) -> float:
    """Deviation of the rescaled kernel from its Gaussian limit.

    R_N(u, v) = P_N(z_u, z_v) exp(|u - v|^2 / 2) - 1 with z_u, z_v at
    affine offsets u/sqrt(N), v/sqrt(N) in a normal frame at z0.  In this
    chart R_N >= 0 and R_N(0, v) = (1 + |v|^2/N)^(-N/2) e^(|v|^2/2) - 1,
    of size |v|^4 / (4N) for moderate v.
    """
    N = ctx.N
    u = np.asarray(u, dtype=np.complex128).reshape(ctx.m)
    v = np.asarray(v, dtype=np.complex128).reshape(ctx.m)
    uv = complex(np.vdot(u, v))
    # log|1 + w| = log1p(2 Re w + |w|^2) / 2 keeps full precision for the
    # near-diagonal regime where all corrections are O(1/N).
    log_p = N * (0.5 * math.log1p(2 * uv.real / N + abs(uv) ** 2 / N ** 2)
                 - 0.5 * math.log1p(float(np.vdot(u, u).real) / N)
                 - 0.5 * math.log1p(float(np.vdot(v, v).real) / N))
    gap = float(np.vdot(u - v, u - v).real)
    return float(np.expm1(log_p + 0.5 * gap))
