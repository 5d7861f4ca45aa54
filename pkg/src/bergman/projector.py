"""Kernel assembly, weighted projection quadrature, and decay fits.

The asymptotic projection kernel is K(x, conj y) = h^{-n} exp((2/h) Psi(x,
conj y)) a(x, conj y; h) with a the realized amplitude.  Projections are
computed by weighted quadrature over a disc (or polydisc) against
exp(-2 phi / h); the kernel and weight exponents are combined before
exponentiation so the integrand never overflows inside the trust region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .amplitude import Amplitude, RealizedSymbol, realize
from .errors import ConfigInvalid, DegenerateFit, QuadratureUnderresolved
from .quadrature import disc_grid, polydisc_grid
from .series import TruncatedSeries
from .weight import Polarization, Weight, _as_points


@dataclass(frozen=True)
class DomainSpec:
    """Quadrature domain: nodes, Lebesgue weights, and the h they serve."""

    shape: str
    radii: tuple[float, ...]
    h: float
    n_radial: int
    n_angular: int
    nodes: np.ndarray      # (m, n) complex
    weights: np.ndarray    # (m,) positive
    breakpoints: tuple[float, ...] = ()

    @property
    def n(self) -> int:
        return self.nodes.shape[1]

    @property
    def radius(self) -> float:
        return max(self.radii)

    def refined(self, factor: int = 2) -> "DomainSpec":
        return make_domain(self.shape, self.radii, self.h,
                           self.n_radial * factor, self.n_angular * factor,
                           self.breakpoints)


def make_domain(shape: str, radii, h: float, n_radial: int = 64,
                n_angular: int = 128, breakpoints: tuple[float, ...] = ()) -> DomainSpec:
    if np.isscalar(radii):
        radii = (float(radii),)
    radii = tuple(float(r) for r in radii)
    if any(r <= 0 for r in radii):
        raise ConfigInvalid(f"domain radii must be positive, got {radii}")
    if h <= 0:
        raise ConfigInvalid(f"h must be positive, got {h}")
    if shape in ("disc", "ball") and len(radii) == 1:
        nodes, weights = disc_grid(radii[0], n_radial, n_angular, breakpoints)
        nodes = nodes[:, None]
    elif shape == "polydisc":
        nodes, weights = polydisc_grid(radii, n_radial, n_angular)
    elif shape == "ball":
        raise ConfigInvalid("ball quadrature is only available for n = 1; use polydisc")
    else:
        raise ConfigInvalid(f"unknown domain shape {shape!r}")
    return DomainSpec(shape=shape, radii=radii, h=float(h), n_radial=n_radial,
                      n_angular=n_angular, nodes=nodes, weights=weights,
                      breakpoints=tuple(breakpoints))


def check_domain(dom: DomainSpec, w: Weight) -> None:
    if dom.n != w.n:
        raise ConfigInvalid(f"domain dimension {dom.n} != weight dimension {w.n}")
    if max(dom.radii) > w.trust_radius:
        raise ConfigInvalid(
            f"domain radius {max(dom.radii)} exceeds trust radius {w.trust_radius}")


@dataclass(frozen=True)
class KernelEvaluator:
    """Evaluates h^{-n} exp((2/h) Psi(x, conj y)) a(x, conj y) at point pairs."""

    pol: Polarization
    symbol: RealizedSymbol
    h: float

    @property
    def n(self) -> int:
        return self.pol.n

    def pair_coords(self, x, y) -> np.ndarray:
        """Stack (x - base, conj(y - base)) rows for the 2n-variable series."""
        n = self.n
        xd = _as_points(x, n) - self.pol.base[None, :]
        yd = np.conj(_as_points(y, n) - self.pol.base[None, :])
        if xd.shape[0] == 1 and yd.shape[0] > 1:
            xd = np.broadcast_to(xd, yd.shape)
        if yd.shape[0] == 1 and xd.shape[0] > 1:
            yd = np.broadcast_to(yd, xd.shape)
        return np.concatenate([xd, yd], axis=1)

    def eval(self, x, y) -> np.ndarray:
        pts = self.pair_coords(x, y)
        psi = self.pol.psi.eval_grid(pts)
        amp = self.symbol.series.eval_grid(pts)
        return self.h ** (-self.n) * np.exp(2.0 * psi / self.h) * amp


def assemble_kernel(pol: Polarization, amp: Amplitude, h: float) -> KernelEvaluator:
    if h <= 0:
        raise ConfigInvalid(f"h must be positive, got {h}")
    return KernelEvaluator(pol=pol, symbol=realize(amp, h), h=float(h))


def apply_projection(K: KernelEvaluator, u: TruncatedSeries, w: Weight,
                     dom: DomainSpec, eval_pts, tol: float | None = None) -> np.ndarray:
    """Quadrature for h^{-n} int e^{(2/h)(Psi(x, conj y) - phi(y))} a u(y) L(dy).

    ``u`` is a holomorphic polynomial in the n displacement coordinates.
    With ``tol`` set, the quadrature is repeated on a doubled grid and
    QuadratureUnderresolved is raised if the results differ by more than
    10 * tol.
    """
    if u.nvars != K.n:
        raise ConfigInvalid(f"test function has {u.nvars} variables, expected {K.n}")
    check_domain(dom, w)

    def run(d: DomainSpec) -> np.ndarray:
        uy = u.eval_grid(d.nodes - w.base[None, :])
        phiy = w.phi(d.nodes)
        xs = _as_points(eval_pts, K.n)
        out = np.empty(xs.shape[0], dtype=complex)
        if K.n == 1:
            # Product-grid path: one bilinear evaluation per chunk of x rows.
            xd = xs[:, 0] - K.pol.base[0]
            yd = np.conj(d.nodes[:, 0] - K.pol.base[0])
            load = d.weights * uy * np.exp(-2.0 * phiy / K.h)
            chunk = max(1, int(2e6 // max(yd.size, 1)))
            for lo in range(0, xd.size, chunk):
                sl = slice(lo, lo + chunk)
                psi = K.pol.psi.eval_bilinear(xd[sl], yd)
                amp = K.symbol.series.eval_bilinear(xd[sl], yd)
                out[sl] = (np.exp(2.0 * psi / K.h) * amp) @ load / K.h
            return out
        for i in range(xs.shape[0]):
            pts = K.pair_coords(xs[i:i + 1], d.nodes)
            psi = K.pol.psi.eval_grid(pts)
            amp = K.symbol.series.eval_grid(pts)
            out[i] = (d.weights * np.exp(2.0 * (psi - phiy) / K.h)
                      * amp * uy).sum() * K.h ** (-K.n)
        return out

    vals = run(dom)
    if tol is not None:
        fine = run(dom.refined())
        drift = float(np.abs(vals - fine).max())
        if drift > 10.0 * tol:
            raise QuadratureUnderresolved(
                f"node doubling moved the projection by {drift:.3e} (> 10*{tol:.1e})")
    return vals


def weighted_norm(w: Weight, values: np.ndarray, dom: DomainSpec,
                  h: float | None = None) -> float:
    """L2 norm against exp(-2 phi / h) over the domain's quadrature."""
    hh = dom.h if h is None else h
    damp = np.exp(-2.0 * w.phi(dom.nodes) / hh)
    return float(np.sqrt((dom.weights * damp * np.abs(values) ** 2).sum()))


def reproducing_error(K: KernelEvaluator, u: TruncatedSeries, w: Weight,
                      inner: DomainSpec, outer: DomainSpec) -> float:
    """Relative weighted defect: ||proj u - u|| over inner / ||u|| over outer."""
    if max(inner.radii) >= max(outer.radii):
        raise ConfigInvalid("inner domain must be strictly inside the outer one")
    proj = apply_projection(K, u, w, outer, inner.nodes)
    exact = u.eval_grid(inner.nodes - w.base[None, :])
    num = weighted_norm(w, proj - exact, inner, K.h)
    den = weighted_norm(w, u.eval_grid(outer.nodes - w.base[None, :]), outer, K.h)
    return num / den


@dataclass(frozen=True)
class DecayFit:
    beta: float
    r2: float
    alpha: float
    r2_loglog: float


FIT_FLOOR = 1e-12


def decay_fit(errors) -> DecayFit:
    """Least squares for log(err) = alpha - beta / h on (h, err) pairs.

    The power-law alternative log(err) = a + b log(h) is fitted alongside
    and its r^2 reported, so sequences that decay polynomially rather than
    exponentially are visible.  Sequences at the numerical floor raise
    DegenerateFit.
    """
    pairs = list(errors)
    if len(pairs) < 3:
        raise DegenerateFit("need at least three (h, error) pairs")
    h = np.asarray([p[0] for p in pairs], dtype=float)
    e = np.asarray([p[1] for p in pairs], dtype=float)
    if np.any(h <= 0.0):
        raise DegenerateFit("h values must be positive")
    if np.any(e <= 0.0):
        raise DegenerateFit("errors must be positive to fit a decay rate")
    if e.max() < FIT_FLOOR:
        raise DegenerateFit(f"errors below the floor {FIT_FLOOR}; nothing to fit")
    loge = np.log(e)
    if loge.max() - loge.min() < FIT_FLOOR:
        raise DegenerateFit("error sequence is flat; no decay rate to fit")

    def lstsq_r2(design: np.ndarray) -> tuple[np.ndarray, float]:
        coef, *_ = np.linalg.lstsq(design, loge, rcond=None)
        resid = loge - design @ coef
        sstot = float(((loge - loge.mean()) ** 2).sum())
        r2 = 1.0 - float((resid ** 2).sum()) / sstot
        return coef, r2

    coef, r2 = lstsq_r2(np.column_stack([np.ones_like(h), -1.0 / h]))
    _, r2_loglog = lstsq_r2(np.column_stack([np.ones_like(h), np.log(h)]))
    return DecayFit(beta=float(coef[1]), r2=r2, alpha=float(coef[0]),
                    r2_loglog=r2_loglog)
