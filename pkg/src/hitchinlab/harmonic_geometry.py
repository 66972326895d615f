"""Orthogonal-filtration splitting and harmonic-map geometry of a solved metric.

From a positive-definite det-1 metric field H the holomorphic filtration by
leading frame vectors is H-orthogonalized; the line metrics are the leading
principal minor ratios

    h_k = det(H[:k,:k]) / det(H[:k-1,:k-1])   ( = |L_kk|^2 for H = L L^dag ),

and the comparison functions against the Fuchsian baseline are

    u_l = log(h_l g0^{m_l}),   z_l = u_l - ut_l,   v_k = sum_{l<=k} z_l,

with v_n = 0 forced by det H = 1.  The harmonic-map invariants are the
energy density e(f) = c_n tr(phi H^{-1} phi^dag H) / g0, the pullback (1,1)
coefficient e(f) g0, and the Hopf coefficient c_n tr(phi^2) (holomorphic and
independent of H), where c_n = 12 / (n (n^2-1)) is the Killing-form
normalization that makes the Fuchsian baseline have e = 1 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex_field import HyperbolicPatch
from .hitchin_solver import (
    FuchsianBaseline,
    MetricDegeneracyError,
    _require_positive_definite,
    fuchsian_baseline,
)

__all__ = [
    "SplittingData",
    "GeometryReport",
    "splitting_metrics",
    "energy_density",
    "pullback_and_hopf",
    "killing_normalization",
]


def killing_normalization(n: int) -> float:
    """12 / (n (n^2 - 1)); equals 1/sum_k r_k, so the baseline has e = 1."""
    return 12.0 / (n * (n * n - 1))


@dataclass(frozen=True)
class SplittingData:
    """Per-node line metrics and baseline comparison functions."""

    n: int
    h: np.ndarray = field(repr=False)  # (N, N, n) positive
    u: np.ndarray = field(repr=False)  # log(h_l g0^{m_l})
    z: np.ndarray = field(repr=False)  # u_l - ut_l
    v: np.ndarray = field(repr=False)  # cumulative sums; v[..., n-1] ~ 0


@dataclass(frozen=True)
class GeometryReport:
    """Scalar invariants of the harmonic map on the patch."""

    n: int
    e: np.ndarray = field(repr=False)     # energy density, real
    g11: np.ndarray = field(repr=False)   # pullback (1,1) coefficient e * g0
    hopf: np.ndarray = field(repr=False)  # c_n tr(phi^2), complex, holomorphic
    e_min: float
    e_max: float
    hopf_sup: float
    energy_integral: float                # trapezoid of 2 e g0 dx dy (diagnostic)


def splitting_metrics(
    H: np.ndarray,
    patch: HyperbolicPatch,
    baseline: FuchsianBaseline | None = None,
) -> SplittingData:
    """H-orthogonalize the standard filtration via Cholesky minor ratios."""
    n = H.shape[-1]
    if baseline is None:
        baseline = fuchsian_baseline(n, patch)
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(H).min(axis=-1)
        iy, ix = np.unravel_index(int(np.argmin(w)), w.shape)
        raise MetricDegeneracyError((iy, ix), "splitting needs H > 0") from None
    h = np.abs(np.diagonal(L, axis1=-2, axis2=-1)) ** 2
    cond = h.min(axis=-1) / h.max(axis=-1)
    if cond.min() < 1e-12:
        iy, ix = np.unravel_index(int(np.argmin(cond)), cond.shape)
        raise MetricDegeneracyError((iy, ix), "near-singular leading block")
    u = np.log(h) + np.log(patch.g0)[..., None] * baseline.m
    z = u - baseline.u
    v = np.cumsum(z, axis=-1)
    return SplittingData(n=n, h=h, u=u, z=z, v=v)


def energy_density(phi: np.ndarray, H: np.ndarray, patch: HyperbolicPatch) -> np.ndarray:
    """e(f) = c_n tr(phi H^{-1} phi^dag H) / g0 -- a weighted squared norm
    of phi, hence real and nonnegative."""
    n = H.shape[-1]
    _require_positive_definite(H)
    Hinv = np.linalg.inv(H)
    phid = np.conj(np.swapaxes(phi, -1, -2))
    tr = np.einsum("...ij,...ji->...", phi @ Hinv, phid @ H).real
    return killing_normalization(n) * tr / patch.g0


def pullback_and_hopf(phi: np.ndarray, H: np.ndarray, patch: HyperbolicPatch) -> GeometryReport:
    """Energy density, pullback (1,1) coefficient, Hopf coefficient, and the
    patch energy integral (diagnostic only -- no closed-surface bound here)."""
    n = H.shape[-1]
    e = energy_density(phi, H, patch)
    hopf = killing_normalization(n) * np.einsum("...ij,...ji->...", phi, phi)
    g11 = e * patch.g0
    xs = patch.xs
    integral = float(np.trapezoid(np.trapezoid(2.0 * e * patch.g0, xs, axis=1), xs, axis=0))
    return GeometryReport(
        n=n,
        e=e,
        g11=g11,
        hopf=hopf,
        e_min=float(e.min()),
        e_max=float(e.max()),
        hopf_sup=float(np.abs(hopf).max()),
        energy_integral=integral,
    )
