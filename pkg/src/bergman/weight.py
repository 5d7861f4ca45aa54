"""Strictly plurisubharmonic weights and their polarizations.

A weight is a real-analytic real-valued function of x in C^n, handled here as
a truncated Taylor series in the 2n displacement variables (x - x0, conj(x) -
conj(x0)).  Realness is the Hermitian symmetry c[beta,alpha] =
conj(c[alpha,beta]) of the coefficient array; strict plurisubharmonicity is
positive definiteness of the mixed-derivative (Levi) matrix.

The polarization Psi(x, ytilde) is the unique holomorphic extension obtained
by relabeling the anti-holomorphic block as an independent holomorphic block:
restricting ytilde back to conj(x) recovers the weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, Degenerate, GapViolation, NotRealValued
from .quadrature import sobol_ball
from .series import TruncatedSeries

HERMITIAN_TOL = 1e-12
LEVI_EIG_FLOOR = 1e-10


def _as_points(x, n: int) -> np.ndarray:
    pts = np.asarray(x, dtype=complex)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts[:, None] if n == 1 else pts[None, :]
    if pts.shape[1] != n:
        raise ValueError(f"points have {pts.shape[1]} coordinates, expected {n}")
    return pts


@dataclass(frozen=True)
class Weight:
    """A validated weight: Taylor series around ``base`` plus a trust radius."""

    n: int
    base: np.ndarray            # shape (n,), complex
    series: TruncatedSeries     # 2n variables: x-block then conj-block
    trust_radius: float

    @property
    def maxdeg(self) -> int:
        return self.series.maxdeg

    def displacements(self, x) -> np.ndarray:
        """Map ambient points to the 2n series coordinates (dx, conj(dx))."""
        pts = _as_points(x, self.n)
        dx = pts - self.base[None, :]
        return np.concatenate([dx, np.conj(dx)], axis=1)

    def phi(self, x) -> np.ndarray:
        """Evaluate the weight; the imaginary part is discarded (it is zero)."""
        vals = self.series.eval_grid(self.displacements(x))
        return vals.real

    def holo_gradient(self, x) -> np.ndarray:
        """d(phi)/dx_j at the given points, shape (m, n)."""
        pts = self.displacements(x)
        cols = [self.series.diff(j).eval_grid(pts) for j in range(self.n)]
        return np.stack(cols, axis=1)


@dataclass(frozen=True)
class Polarization:
    """Holomorphic extension Psi(x, ytilde) of a weight."""

    n: int
    base: np.ndarray
    psi: TruncatedSeries        # 2n variables: x-block then ytilde-block
    b_matrix: np.ndarray        # mixed block d2Psi/dx dytilde at the base

    def eval(self, x, ytilde) -> np.ndarray:
        """Psi at displaced coordinates; both arguments are ambient points."""
        xp = _as_points(x, self.n) - self.base[None, :]
        yp = _as_points(ytilde, self.n) - np.conj(self.base)[None, :]
        return self.psi.eval_grid(np.concatenate([xp, yp], axis=1))


def validate_weight(series: TruncatedSeries, base, trust_radius: float) -> Weight:
    """Check realness and strict plurisubharmonicity; returns the Weight.

    The coefficient array is symmetrized after the Hermitian check so that
    downstream algebra sees an exactly real weight.
    """
    if series.nvars % 2 != 0:
        raise NotRealValued("weight series needs an even variable count (x and conj blocks)")
    n = series.nvars // 2
    base = np.asarray(base, dtype=complex).reshape(n)
    if trust_radius <= 0.0:
        raise ConfigInvalid("trust radius must be positive")

    scale = max(series.max_abs(), 1.0)
    sym: dict[tuple, complex] = {}
    for mi, c in series.coeffs.items():
        partner = mi[n:] + mi[:n]
        cp = series.coeffs.get(partner, 0.0 + 0.0j)
        if abs(c - np.conj(cp)) > HERMITIAN_TOL * scale:
            raise NotRealValued(
                f"coefficient at {mi} is {c}, partner at {partner} is {cp}; "
                "Hermitian symmetry violated")
        sym[mi] = 0.5 * (c + np.conj(cp))
    symmetric = TruncatedSeries(series.nvars, series.maxdeg, sym)

    w = Weight(n=n, base=base, series=symmetric, trust_radius=float(trust_radius))
    levi = levi_form(w, base)
    eigs = np.linalg.eigvalsh(levi)
    if eigs.min() <= LEVI_EIG_FLOOR:
        raise Degenerate(f"Levi form not strictly positive at the base: eigenvalues {eigs}")
    return w


def levi_form(w: Weight, x) -> np.ndarray:
    """Mixed second-derivative matrix d2(phi)/dx_j dconj(x)_k at a point."""
    pts = w.displacements(x)
    if pts.shape[0] != 1:
        raise ValueError("levi_form evaluates one point at a time")
    n = w.n
    out = np.empty((n, n), dtype=complex)
    for j in range(n):
        dj = w.series.diff(j)
        for k in range(n):
            out[j, k] = dj.diff(n + k).eval_grid(pts)[0]
    # Clean roundoff: the matrix is Hermitian for a real weight.
    return 0.5 * (out + out.conj().T)


def polarize(w: Weight) -> Polarization:
    """Relabel the conj block as an independent holomorphic block."""
    psi = TruncatedSeries(w.series.nvars, w.series.maxdeg,
                          dict(w.series.coeffs), _checked=True)
    n = w.n
    b = np.empty((n, n), dtype=complex)
    origin = np.zeros((1, 2 * n), dtype=complex)
    for j in range(n):
        dj = psi.diff(j)
        for k in range(n):
            b[j, k] = dj.diff(n + k).eval_grid(origin)[0]
    smin = np.linalg.svd(b, compute_uv=False).min()
    if smin <= LEVI_EIG_FLOOR:
        raise Degenerate(f"mixed block of the polarization is singular: smin={smin}")
    return Polarization(n=n, base=w.base.copy(), psi=psi, b_matrix=b)


def quadratic_gap_estimate(w: Weight, pol: Polarization, radius: float,
                           n_samples: int = 4096, seed: int = 0) -> tuple[float, float]:
    """Sampled bounds for (phi(x) + phi(y) - 2 Re Psi(x, conj(y))) / |x-y|^2.

    The gap must be strictly positive for a strictly plurisubharmonic weight;
    a nonpositive sampled minimum raises GapViolation.
    """
    if radius <= 0.0 or radius > w.trust_radius:
        raise ValueError("sampling radius must lie in (0, trust_radius]")
    pts = sobol_ball(2 * w.n, radius, n_samples, seed=seed)
    x = pts[:, :w.n] + w.base[None, :]
    y = pts[:, w.n:] + w.base[None, :]
    sep2 = (np.abs(x - y) ** 2).sum(axis=1)
    keep = sep2 > (1e-6 * radius) ** 2
    x, y, sep2 = x[keep], y[keep], sep2[keep]
    gap = w.phi(x) + w.phi(y) - 2.0 * pol.eval(x, np.conj(y)).real
    ratio = gap / sep2
    cmin, cmax = float(ratio.min()), float(ratio.max())
    if cmin <= 0.0:
        raise GapViolation(f"sampled quadratic gap hit {cmin} at radius {radius}")
    return cmin, cmax
