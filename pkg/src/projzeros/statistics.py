"""Linear statistics of zero sets, by exact roots and by potential theory.

Two routes to the random variable (Z_s, phi):

* roots (m = 1): find all zeros and sum phi over them with multiplicity.
* pl (any m): the Poincare-Lelong identity

      (Z_s, phi) = (1/pi) int log||s|| psi Omega + (N/pi) int omega wedge phi,

  where i ddbar phi = psi Omega; the first term is quadrature over a
  grid, the second is the exact closed-form mean of the statistic.

Batch drivers sample one Philox substream per trial, so results are
independent of batch size and identical across reruns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import (Section, basis_dimension, basis_weights,
                       log_norm_many, sample_coeff_block)
from .errors import UnsupportedDimension
from .geometry import CapRegion, QuadratureGrid
from .roots import ZeroSet, aberth_roots_batch, affine_to_homog, find_roots
from .testforms import TestForm

# Retry offset for discarded trials: the redraw substream index never
# collides with primary trial indices.
_REDRAW_OFFSET = 1 << 31


def linear_stat_roots(section: Section, form: TestForm) -> float:
    """Sum of phi over the zero set of a degree-N section (m = 1)."""
    zeros = find_roots(section)
    vals = form.phi_many(zeros.points_homog)
    return float(np.dot(vals, zeros.multiplicities))


def linear_stat_pl(section: Section, form: TestForm,
                   grid: QuadratureGrid) -> float:
    """Poincare-Lelong route for the same statistic (any m)."""
    if grid.m != section.m or form.m != section.m:
        raise UnsupportedDimension("grid, form, and section dimensions differ")
    bw = basis_weights(section.degree, section.m)
    logs = log_norm_many(section.coeffs[None, :], grid.nodes_homog, bw)[0]
    psi_w = grid.weights * form.psi_many(grid.nodes_homog)
    return float(np.dot(logs, psi_w) / math.pi
                 + form.expected_mean(section.degree))


def count_in_cap(zeros: ZeroSet, cap: CapRegion) -> int:
    """Zeros (with multiplicity) strictly inside a metric cap."""
    inside = cap.contains_many(zeros.points_homog)
    return int(zeros.multiplicities[inside].sum())


@dataclass
class TrialBlock:
    """Per-trial values and bookkeeping from a batch run."""

    values: np.ndarray
    trial_index: np.ndarray
    residual_log10: np.ndarray
    flags: list
    discarded: list
    route: str


def _roots_batch_values(N: int, master_seed: int, trial_indices: np.ndarray,
                        evaluate) -> tuple:
    """Roots for a block of trials; returns (ok_mask, values, residuals).

    evaluate(roots_affine (B, N)) -> (B,) statistic values; complex
    return values may pack a second statistic in the imaginary part.
    """
    coeffs = np.empty((trial_indices.size, N + 1), dtype=np.complex128)
    for i, t in enumerate(trial_indices):
        coeffs[i] = sample_coeff_block(N, 1, master_seed, int(t), 1)[0]
    bw = basis_weights(N, 1)
    a = coeffs * bw.weights[None, :]
    roots, eta, conv, _ = aberth_roots_batch(a)
    values = np.where(conv, np.asarray(evaluate(roots), dtype=np.complex128),
                      np.nan)
    residual = np.log10(np.maximum(eta.max(axis=1), 1e-320))
    return conv, values, residual


def roots_trials(N: int, master_seed: int, n_trials: int, evaluate,
                 batch: int | None = None, trial_start: int = 0) -> TrialBlock:
    """Run the roots route over trials, redrawing failed ones once."""
    if batch is None:
        batch = int(np.clip(2.4e7 // max(N * N, 1), 8, 512))
    values = np.empty(n_trials, dtype=np.complex128)
    residual = np.empty(n_trials)
    ok_all = np.zeros(n_trials, dtype=bool)
    indices = np.arange(trial_start, trial_start + n_trials)
    for start in range(0, n_trials, batch):
        sl = slice(start, min(start + batch, n_trials))
        ok, vals, res = _roots_batch_values(N, master_seed, indices[sl], evaluate)
        values[sl], residual[sl], ok_all[sl] = vals, res, ok

    discarded = []
    flags = [""] * n_trials
    bad = np.nonzero(~ok_all)[0]
    for idx in bad:
        retry_idx = np.array([indices[idx] + _REDRAW_OFFSET])
        ok, vals, res = _roots_batch_values(N, master_seed, retry_idx, evaluate)
        if ok[0]:
            values[idx], residual[idx] = vals[0], res[0]
            ok_all[idx] = True
            flags[idx] = "redrawn"
        else:
            discarded.append(int(indices[idx]))
    keep = ok_all
    return TrialBlock(values=values[keep], trial_index=indices[keep],
                      residual_log10=residual[keep],
                      flags=[f for f, k in zip(flags, keep) if k],
                      discarded=discarded, route="roots")


def statistic_evaluator(form: TestForm):
    """evaluate() closure for roots_trials: sum phi over simple roots."""

    def evaluate(roots_affine: np.ndarray) -> np.ndarray:
        homog = affine_to_homog(roots_affine.reshape(-1))
        vals = form.phi_many(homog).reshape(roots_affine.shape)
        return vals.sum(axis=1)

    return evaluate


def count_evaluator(cap: CapRegion):
    """evaluate() closure counting roots strictly inside a cap."""
    center = np.conj(cap.center.homog)
    cos_r = math.cos(cap.radius)

    def evaluate(roots_affine: np.ndarray) -> np.ndarray:
        homog = affine_to_homog(roots_affine.reshape(-1))
        overlap = np.abs(homog @ center).reshape(roots_affine.shape)
        return (overlap > cos_r).sum(axis=1).astype(np.float64)

    return evaluate


def pl_trials(N: int, m: int, form: TestForm, grid: QuadratureGrid,
              master_seed: int, n_trials: int, trial_batch: int = 96,
              node_chunk: int = 8192, refine_grid: QuadratureGrid | None = None,
              flag_tol: float | None = None,
              trial_start: int = 0) -> TrialBlock:
    """Poincare-Lelong route over trials, optionally with refinement flags.

    When refine_grid is given, each trial is also evaluated on it and
    flagged "suspect" if the two values differ by more than flag_tol.
    """
    from .ensemble import basis_matrix

    bw = basis_weights(N, m)
    d = basis_dimension(N, m)
    grids = [grid] if refine_grid is None else [grid, refine_grid]
    qs = [g.weights * form.psi_many(g.nodes_homog) / math.pi for g in grids]
    indices = np.arange(trial_start, trial_start + n_trials)
    totals = [np.zeros(n_trials) for _ in grids]
    mean_term = form.expected_mean(N)

    for start in range(0, n_trials, trial_batch):
        stop = min(start + trial_batch, n_trials)
        coeffs = np.empty((stop - start, d), dtype=np.complex128)
        for i, t in enumerate(indices[start:stop]):
            coeffs[i] = sample_coeff_block(N, m, master_seed, int(t), 1)[0]
        for gi, g in enumerate(grids):
            acc = np.zeros(stop - start)
            for cs in range(0, g.n_nodes, node_chunk):
                ce = min(cs + node_chunk, g.n_nodes)
                M = basis_matrix(bw, g.nodes_homog[cs:ce])
                vals = coeffs @ M.T
                acc += np.log(np.maximum(np.abs(vals), 1e-300)) @ qs[gi][cs:ce]
            totals[gi][start:stop] = acc + mean_term

    flags = [""] * n_trials
    if refine_grid is not None:
        if flag_tol is None:
            raise ValueError("flag_tol required with refine_grid")
        for i in range(n_trials):
            if abs(totals[0][i] - totals[1][i]) > flag_tol:
                flags[i] = "suspect"
    return TrialBlock(values=totals[0], trial_index=indices,
                      residual_log10=np.full(n_trials, np.nan),
                      flags=flags, discarded=[], route="pl")
