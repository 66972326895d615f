"""Square coordinate patch in the Poincare disk and complex finite differences.

Everything downstream lives on a uniform grid over [-R, R]^2 inside the unit
disk, carrying the density g0(z) = 2/(1-|z|^2)^2 of the curvature -1 metric
g0 |dz|^2 (so that d_zbar d_z log g0 = g0).  Scalar fields are (N, N) arrays
indexed [iy, ix]; matrix fields are (N, N, n, n).  Derivatives are
second-order centered differences in the interior and second-order one-sided
stencils on the boundary, combined into the Wirtinger operators

    d_z    = (d_x - i d_y) / 2,
    d_zbar = (d_x + i d_y) / 2,

applied entrywise to matrix fields.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigurationError",
    "HyperbolicPatch",
    "make_patch",
    "d_z",
    "d_zbar",
    "sample_polynomial",
    "liouville_residual",
    "write_field_csv",
    "read_field_csv",
]


class ConfigurationError(ValueError):
    """Raised when patch or run parameters are outside the supported range."""


@dataclass(frozen=True)
class HyperbolicPatch:
    """Uniform N x N grid on [-R, R]^2 with the hyperbolic density g0."""

    R: float
    N: int
    spacing: float
    z: np.ndarray = field(repr=False)       # (N, N) complex nodes, row-major
    g0: np.ndarray = field(repr=False)      # (N, N) real density 2/(1-|z|^2)^2

    @property
    def xs(self) -> np.ndarray:
        return self.z[0].real

    def interior(self) -> tuple[slice, slice]:
        return slice(1, -1), slice(1, -1)


def make_patch(R: float, N: int) -> HyperbolicPatch:
    """Build the patch; R is capped at 0.95 to keep g0 (and the
    conditioning of the solves) bounded."""
    if not 0.0 < R <= 0.95:
        raise ConfigurationError(f"patch half-width R={R} outside (0, 0.95]")
    if N < 8:
        raise ConfigurationError(f"grid needs at least 8 nodes per side, got N={N}")
    xs = np.linspace(-R, R, N)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    Z = X + 1j * Y
    g0 = 2.0 / (1.0 - np.abs(Z) ** 2) ** 2
    return HyperbolicPatch(R=float(R), N=int(N), spacing=float(xs[1] - xs[0]), z=Z, g0=g0)


def _check_field(f: np.ndarray, patch: HyperbolicPatch) -> None:
    if f.shape[:2] != (patch.N, patch.N):
        raise ValueError(
            f"field shape {f.shape} does not match patch grid {patch.N}x{patch.N}"
        )


def _d_axis(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order d/dx or d/dy along one grid axis, one-sided at the ends."""
    out = np.empty_like(f, dtype=complex)

    def sl(a, b):
        s = [slice(None)] * f.ndim
        s[axis] = slice(a, b)
        return tuple(s)

    out[sl(1, -1)] = (f[sl(2, None)] - f[sl(0, -2)]) / (2.0 * h)
    out[sl(0, 1)] = (-3.0 * f[sl(0, 1)] + 4.0 * f[sl(1, 2)] - f[sl(2, 3)]) / (2.0 * h)
    out[sl(-1, None)] = (3.0 * f[sl(-1, None)] - 4.0 * f[sl(-2, -1)] + f[sl(-3, -2)]) / (2.0 * h)
    return out


def d_z(f: np.ndarray, patch: HyperbolicPatch) -> np.ndarray:
    """Discrete d_z = (d_x - i d_y)/2.  x runs along axis 1, y along axis 0."""
    _check_field(f, patch)
    return 0.5 * (_d_axis(f, patch.spacing, 1) - 1j * _d_axis(f, patch.spacing, 0))


def d_zbar(f: np.ndarray, patch: HyperbolicPatch) -> np.ndarray:
    """Discrete d_zbar = (d_x + i d_y)/2."""
    _check_field(f, patch)
    return 0.5 * (_d_axis(f, patch.spacing, 1) + 1j * _d_axis(f, patch.spacing, 0))


def sample_polynomial(coeffs, patch: HyperbolicPatch) -> np.ndarray:
    """Evaluate sum_k coeffs[k] z^k at every node (Horner).  Empty list -> 0."""
    out = np.zeros((patch.N, patch.N), dtype=complex)
    for c in reversed(list(coeffs)):
        out = out * patch.z + c
    return out


def liouville_residual(patch: HyperbolicPatch) -> float:
    """Sup over interior nodes of |d_zbar d_z log g0 - g0|.

    The composed stencil is O(spacing^2) away from the edge but only
    O(spacing) on the outermost interior ring, where the second pass
    differences one-sided against centered first-pass values; the sup over
    the whole interior therefore scales like spacing, not spacing^2."""
    lap = d_zbar(d_z(np.log(patch.g0), patch), patch)
    I = patch.interior()
    return float(np.abs(lap[I] - patch.g0[I]).max())


# ---------------------------------------------------------------------------
# field dump format (shared with cli_runner)
#
# One header line recording the field name and the grid, then one row per
# node in row-major order:  index, x, y, re, im [, re, im ...].  A scalar
# field has one (re, im) pair; an n x n matrix field has n^2 pairs in
# row-major entry order.  Floats use 17 significant digits so values
# round-trip exactly.

_HEADER_RE = re.compile(
    r"#\s*field=(?P<name>\S+)\s+n=(?P<n>\d+)\s+N=(?P<N>\d+)\s+R=(?P<R>\S+)"
)


def write_field_csv(path, name: str, values: np.ndarray, patch: HyperbolicPatch, n: int) -> None:
    """Dump a scalar or matrix field in the shared CSV format."""
    _check_field(values, patch)
    N = patch.N
    vals = np.asarray(values, dtype=complex).reshape(N * N, -1)
    x = patch.z.real.reshape(-1)
    y = patch.z.imag.reshape(-1)
    cols = [np.arange(N * N, dtype=float), x, y]
    for k in range(vals.shape[1]):
        cols.append(vals[:, k].real)
        cols.append(vals[:, k].imag)
    table = np.column_stack(cols)
    header = f"field={name} n={n} N={N} R={patch.R:.17g}"
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=header)


def read_field_csv(path):
    """Read a dump produced by write_field_csv.

    Returns (name, values, meta) where meta is a dict with n, N, R and the
    values array has shape (N, N) or (N, N, n, n)."""
    with open(path) as fh:
        first = fh.readline()
    m = _HEADER_RE.match(first)
    if m is None:
        raise ValueError(f"{path}: missing or malformed field header line")
    n, N, R = int(m["n"]), int(m["N"]), float(m["R"])
    table = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if table.shape[0] != N * N:
        raise ValueError(f"{path}: expected {N * N} rows, found {table.shape[0]}")
    pairs = (table.shape[1] - 3) // 2
    vals = table[:, 3::2] + 1j * table[:, 4::2]
    if pairs == 1:
        values = vals.reshape(N, N)
    elif pairs == n * n:
        values = vals.reshape(N, N, n, n)
    else:
        raise ValueError(f"{path}: {pairs} value pairs fit neither scalar nor {n}x{n} matrix")
    meta = {"n": n, "N": N, "R": R}
    return m["name"], values, meta
