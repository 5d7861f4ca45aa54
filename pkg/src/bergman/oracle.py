"""Independent ground truth for the asymptotic kernel machinery.

Gram-matrix reproducing kernels, direct contour quadrature against the
stationary-phase expansion, numerical Fourier inversion on the theta
contour, localized elements, the pointwise-evaluation bound, and sampled
contour inequalities.  Everything here is built from plain quadrature and
linear algebra so it shares no code path with the formal expansion engine.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import BadContour, ConfigInvalid, IllConditioned, QuadratureUnderresolved
from .phase import (PhaseData, build_good_contour, phase_on_contour,
                    theta_jacobian_pairs, theta_pairs)
from .amplitude import formal_expansion
from .series import HGradedSeries
from .projector import DomainSpec, KernelEvaluator, check_domain, weighted_norm
from .quadrature import disc_grid, radial_bump, sobol_ball
from .series import TruncatedSeries
from .weight import Polarization, Weight, _as_points, polarize, quadratic_gap_estimate

# Sign of the theta-contour orientation, fixed once by requiring the
# Gaussian u = 1 inversion to return +1.  Guarded by a regression test.
CONTOUR_ORIENTATION = 1.0

GRAM_COND_CAP = 1e12
GRAM_HERMITIAN_TOL = 1e-12


# ---------------------------------------------------------------------------
# Gram-matrix oracle


@dataclass(frozen=True)
class GramKernel:
    """Reproducing kernel of the monomial span under the weighted pairing."""

    w: Weight
    dom: DomainSpec
    degree: int
    basis: tuple                 # multi-indices, degree-sorted
    gram: np.ndarray             # raw Hermitian Gram matrix
    scale: np.ndarray            # diagonal normalization applied before factoring
    chol: tuple                  # cho_factor of the scaled Gram matrix
    cond: float

    @property
    def h(self) -> float:
        return self.dom.h

    def _monomials(self, pts: np.ndarray) -> np.ndarray:
        disp = pts - self.w.base[None, :]
        out = np.empty((disp.shape[0], len(self.basis)), dtype=complex)
        for col, alpha in enumerate(self.basis):
            acc = np.ones(disp.shape[0], dtype=complex)
            for j, a in enumerate(alpha):
                if a:
                    acc = acc * disp[:, j] ** a
            out[:, col] = acc
        return out

    def eval(self, x, y) -> np.ndarray:
        """K_exact(x_i, conj(y_i)) for paired points (either may broadcast)."""
        xs = _as_points(x, self.w.n)
        ys = _as_points(y, self.w.n)
        if xs.shape[0] == 1 and ys.shape[0] > 1:
            xs = np.broadcast_to(xs, ys.shape)
        if ys.shape[0] == 1 and xs.shape[0] > 1:
            ys = np.broadcast_to(ys, xs.shape)
        a = self._monomials(xs) * self.scale[None, :]
        b = self._monomials(ys).conj() * self.scale[None, :]
        solved = cho_solve(self.chol, b.T)
        return np.einsum("pk,kp->p", a, solved)

    def project(self, u: TruncatedSeries, x) -> np.ndarray:
        """Quadrature projection of u through this kernel, at the points x."""
        nodes = self.dom.nodes
        uy = u.eval_grid(nodes - self.w.base[None, :])
        damp = self.dom.weights * np.exp(-2.0 * self.w.phi(nodes) / self.h)
        xs = _as_points(x, self.w.n)
        out = np.empty(xs.shape[0], dtype=complex)
        for i in range(xs.shape[0]):
            out[i] = (damp * self.eval(xs[i:i + 1], nodes) * uy).sum()
        return out


def _degree_basis(n: int, degree: int) -> tuple:
    idx = [alpha for alpha in itertools.product(range(degree + 1), repeat=n)
           if sum(alpha) <= degree]
    idx.sort(key=lambda a: (sum(a), a))
    return tuple(idx)


def gram_bergman(w: Weight, dom: DomainSpec, degree: int) -> GramKernel:
    """Brute-force reproducing kernel on monomials of total degree <= degree."""
    check_domain(dom, w)
    if degree < 0:
        raise ConfigInvalid("basis degree must be nonnegative")
    if dom.n_angular < 4 * degree:
        raise ConfigInvalid(
            f"{dom.n_angular} angular nodes cannot resolve frequency {degree}; "
            f"need at least {4 * degree}")
    basis = _degree_basis(w.n, degree)
    # G = V^H diag(weights e^{-2 phi/h}) V over the quadrature nodes.
    disp = dom.nodes - w.base[None, :]
    V = np.empty((disp.shape[0], len(basis)), dtype=complex)
    for col, alpha in enumerate(basis):
        acc = np.ones(disp.shape[0], dtype=complex)
        for j, a in enumerate(alpha):
            if a:
                acc = acc * disp[:, j] ** a
        V[:, col] = acc
    wts = dom.weights * np.exp(-2.0 * w.phi(dom.nodes) / dom.h)
    G = V.conj().T @ (wts[:, None] * V)
    herm = np.abs(G - G.conj().T).max() / max(np.abs(G).max(), 1e-300)
    if herm > GRAM_HERMITIAN_TOL:
        raise IllConditioned(f"gram matrix departs from Hermitian by {herm:.3e}")
    G = 0.5 * (G + G.conj().T)
    diag = G.diagonal().real
    if np.any(diag <= 0.0):
        raise IllConditioned("gram matrix has a nonpositive diagonal entry")
    scale = 1.0 / np.sqrt(diag)
    Gs = scale[:, None] * G * scale[None, :]
    cond = float(np.linalg.cond(Gs))
    if cond > GRAM_COND_CAP:
        raise IllConditioned(
            f"scaled gram condition {cond:.3e} exceeds {GRAM_COND_CAP:.0e}; "
            f"lower the degree or raise h")
    try:
        chol = cho_factor(Gs, lower=True)
    except LinAlgError as exc:
        raise IllConditioned(f"gram factorization failed: {exc}") from exc
    return GramKernel(w=w, dom=dom, degree=degree, basis=basis, gram=G,
                      scale=scale, chol=chol, cond=cond)


@dataclass(frozen=True)
class CompareStats:
    rel_errors: np.ndarray
    max_rel: float
    median_rel: float
    asym: np.ndarray
    exact: np.ndarray


def near_diagonal_pairs(radius: float, count: int = 20,
                        offset_frac: float = 0.3) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic point pairs on and just off the diagonal, n = 1."""
    k = np.arange(count)
    x = radius * np.exp(2j * np.pi * k / count)
    y = x.copy()
    odd = k % 2 == 1
    y[odd] = x[odd] + offset_frac * radius * np.exp(2.4j * k[odd])
    return x[:, None], y[:, None]


def compare_kernels(K_asym: KernelEvaluator, K_exact: GramKernel,
                    x, y) -> CompareStats:
    a = K_asym.eval(x, y)
    g = K_exact.eval(x, y)
    rel = np.abs(a - g) / np.abs(g)
    return CompareStats(rel_errors=rel, max_rel=float(rel.max()),
                        median_rel=float(np.median(rel)), asym=a, exact=g)


# ---------------------------------------------------------------------------
# Fourier inversion on the theta contour


@dataclass(frozen=True)
class FourierCheck:
    value: complex
    target: complex
    residual: float
    h: float


def fourier_inversion_check(w: Weight, u: TruncatedSeries, x, dom: DomainSpec,
                            h: float, plateau_frac: float = 0.6,
                            support_frac: float = 0.9,
                            orientation: float = CONTOUR_ORIENTATION,
                            tol: float | None = None) -> FourierCheck:
    """Inversion integral (2 pi h)^{-n} int e^{(i/h)(x-y) theta} u chi dy dtheta.

    The contour is parametrized by y with theta = theta(x, y), contributing
    the Jacobian det(d theta / d conj y) and a factor (2i)^n from rewriting
    d(conj y) wedge dy as Lebesgue measure.  Returns the residual against
    u(x), damped by e^{-phi(x)/h}.
    """
    if w.n != 1:
        raise ConfigInvalid("fourier inversion quadrature is implemented for n = 1")
    if u.nvars != w.n:
        raise ConfigInvalid(f"u has {u.nvars} variables, expected {w.n}")
    xs = _as_points(x, w.n)
    R = dom.radius
    plateau, support = plateau_frac * R, support_frac * R
    if float(np.abs(xs - w.base[None, :]).max()) >= plateau:
        raise ConfigInvalid("evaluation point lies outside the cutoff plateau")

    def run(n_radial: int, n_angular: int) -> complex:
        nodes, wts = disc_grid(support, n_radial, n_angular, (plateau,))
        y = nodes[:, None] + w.base[None, :]
        chi = radial_bump(np.abs(nodes), plateau, support)
        th = theta_pairs(w, xs, y)
        jac = theta_jacobian_pairs(w, xs, y)
        pairing = ((xs - y) * th).sum(axis=1)
        uy = u.eval_grid(y - w.base[None, :])
        vals = np.exp(1j * pairing / h) * uy * chi * jac
        const = orientation * (2j) ** w.n / (2.0 * np.pi * h) ** w.n
        return complex(const * (wts * vals).sum())

    value = run(dom.n_radial, dom.n_angular)
    if tol is not None:
        fine = run(2 * dom.n_radial, 2 * dom.n_angular)
        if abs(value - fine) > 10.0 * tol:
            raise QuadratureUnderresolved(
                f"node doubling moved the inversion integral by {abs(value - fine):.3e}")
    target = complex(u.eval_grid(xs - w.base[None, :])[0])
    residual = abs(value - target) * math.exp(-float(w.phi(xs)[0]) / h)
    return FourierCheck(value=value, target=target, residual=residual, h=h)


# ---------------------------------------------------------------------------
# Pointwise evaluation bound


@dataclass(frozen=True)
class PointwiseBound:
    h_values: tuple
    ratios: tuple
    max_ratio: float


def pointwise_bound_check(w: Weight, u: TruncatedSeries, inner: DomainSpec,
                          outer: DomainSpec, h_values) -> PointwiseBound:
    """sup over the inner region of h^n |u| e^{-phi/h}, against the outer norm."""
    if max(inner.radii) >= max(outer.radii):
        raise ConfigInvalid("inner region must be strictly inside the outer one")
    check_domain(outer, w)
    ui = u.eval_grid(inner.nodes - w.base[None, :])
    uo = u.eval_grid(outer.nodes - w.base[None, :])
    phi_i = w.phi(inner.nodes)
    ratios = []
    for h in h_values:
        sup = float((np.abs(ui) * np.exp(-phi_i / h)).max())
        nrm = weighted_norm(w, uo, outer, h)
        ratios.append(h ** w.n * sup / nrm)
    return PointwiseBound(h_values=tuple(float(h) for h in h_values),
                          ratios=tuple(ratios), max_ratio=max(ratios))


# ---------------------------------------------------------------------------
# Contour inequalities


@dataclass(frozen=True)
class InequalityProbe:
    w: Weight
    pol: Polarization
    z: np.ndarray
    delta: float
    radius: float
    n_samples: int = 10_000
    seed: int = 0


@dataclass(frozen=True)
class MarginSuite:
    theta_margin: float
    gz_margin: float
    ratio_min: float
    delta: float
    radius: float
    n_samples: int


def inequality_suite(probe: InequalityProbe) -> MarginSuite:
    """Sampled minima of the two contour inequalities; both must be positive.

    (a) phi(x) - phi(y) + Im((x - y).theta(x, y)) >= (delta + margin)|x - y|^2
    (b) phi(x) + phi(y) - 2 Re Psi(x, conj y) + delta|x - z|^2
          >= margin (|x - z|^2 + |y - z|^2)
    """
    w, pol = probe.w, probe.pol
    if probe.delta <= 0.0:
        raise ConfigInvalid("delta must be positive")
    if probe.radius > w.trust_radius:
        raise ConfigInvalid("sampling radius exceeds the trust radius")
    z = np.asarray(probe.z, dtype=complex).reshape(w.n)
    m = probe.n_samples
    x = sobol_ball(w.n, probe.radius, m, seed=probe.seed) + w.base[None, :]
    y = sobol_ball(w.n, probe.radius, m, seed=probe.seed + 1) + w.base[None, :]

    sep2 = (np.abs(x - y) ** 2).sum(axis=1)
    keep = sep2 > (1e-8 * probe.radius) ** 2
    th = theta_pairs(w, x[keep], y[keep])
    pairing = ((x[keep] - y[keep]) * th).sum(axis=1)
    ratio = (w.phi(x[keep]) - w.phi(y[keep]) + pairing.imag) / sep2[keep]
    ratio_min = float(ratio.min())
    theta_margin = ratio_min - probe.delta

    dz_x = (np.abs(x - z[None, :]) ** 2).sum(axis=1)
    dz_y = (np.abs(y - z[None, :]) ** 2).sum(axis=1)
    denom = dz_x + dz_y
    keep2 = denom > (1e-8 * probe.radius) ** 2
    gap = (w.phi(x) + w.phi(y)
           - 2.0 * pol.eval(x, np.conj(y)).real)
    gz_ratio = (gap[keep2] + probe.delta * dz_x[keep2]) / denom[keep2]
    gz_margin = float(gz_ratio.min())

    if theta_margin <= 0.0:
        raise BadContour(
            f"theta-contour margin {theta_margin:.3e} not positive "
            f"(sampled constant {ratio_min:.4f}, delta {probe.delta})")
    if gz_margin <= 0.0:
        raise BadContour(f"shifted-gap margin {gz_margin:.3e} not positive")
    return MarginSuite(theta_margin=theta_margin, gz_margin=gz_margin,
                       ratio_min=ratio_min, delta=probe.delta,
                       radius=probe.radius, n_samples=probe.n_samples)


# ---------------------------------------------------------------------------
# Stationary-phase engine vs direct contour quadrature


@dataclass(frozen=True)
class QuadratureCase:
    name: str
    symbol: TruncatedSeries      # 2n variables, outgoing (x, yt) displacements
    terminating: bool


@dataclass(frozen=True)
class QuadratureResult:
    name: str
    terminating: bool
    h: float
    quad: complex
    partial: complex
    order_used: int
    next_term: float
    error: float
    ok: bool


def _contour_radius(pd: PhaseData, contour, h: float, max_radius: float,
                    n_probe: int = 48, n_angles: int = 64) -> tuple[float, float]:
    """Smallest radius whose boundary decay suffices, else the best available.

    Returns (radius, g) with g = min of -Re(phi) on the bounding circle; the
    quadrature truncation error is of order e^{-2g/h}.
    """
    angles = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    target = 19.0 * h
    best = (0.0, -np.inf)
    for rho in np.linspace(0.15, max_radius, n_probe):
        vals = phase_on_contour(pd, contour, (rho * angles)[:, None])
        g = float(-vals.real.max())
        if g <= 0.0:
            break
        if g > best[1]:
            best = (rho, g)
        if g >= target:
            return rho, g
    if best[1] <= 0.0:
        raise BadContour("no positive-decay radius found for the fast contour")
    return best


def sp_quadrature_check(pd: PhaseData, cases, h_values, center=None,
                        hmax: int = 6, max_radius: float = 4.0,
                        n_radial: int = 160, n_angular: int = 256,
                        terminating_tol: float = 1e-8,
                        bound_factor: float = 10.0) -> list[QuadratureResult]:
    """Direct quadrature of the fast contour integral against the expansion.

    The integral h^{-n} conj(b) int e^{(2/h) phi} f L(du) over the good
    contour through the center is compared with the formal series: exact
    agreement for terminating symbols, next-term bound otherwise.
    """
    if pd.n != 1:
        raise ConfigInvalid("contour quadrature oracle is implemented for n = 1")
    contour = build_good_contour(pd, center)
    b = complex(contour.b_at_center[0, 0])
    center_pt = contour.center.reshape(1, 2 * pd.n)

    results = []
    for case in cases:
        f = case.symbol
        if f.nvars != 2 * pd.n:
            raise ConfigInvalid(f"case {case.name}: symbol must have {2 * pd.n} variables")
        lifted = f.truncate(max(f.maxdeg, 2 * hmax + 2, pd.maxdeg - 2))
        terms = formal_expansion(pd, HGradedSeries([lifted]), hmax)
        vals = np.array([terms.coefficient(j).eval_grid(center_pt)[0]
                         for j in range(hmax + 1)])

        for h in h_values:
            rho, g = _contour_radius(pd, contour, h, max_radius)
            nodes, wts = disc_grid(rho, n_radial, n_angular)
            u = nodes[:, None]
            phi_vals = phase_on_contour(pd, contour, u)
            xfast, ytfast = contour.fast_map(u)
            fv = f.eval_grid(np.concatenate([xfast, ytfast], axis=1))
            quad = complex(np.conj(b) / h * (wts * np.exp(2.0 * phi_vals / h)
                                             * fv).sum())
            tail = math.exp(-2.0 * g / h) * max(abs(quad), 1.0)

            if case.terminating or not (np.abs(vals) > 0).any():
                # exact sum, or a series vanishing identically at the center
                partial = complex(np.polyval(vals[::-1], h))
                order_used, next_term = hmax, 0.0
                err = abs(quad - partial)
                budget = terminating_tol * max(1.0, abs(partial))
                if tail > 0.25 * budget:
                    raise QuadratureUnderresolved(
                        f"case {case.name}: boundary decay e^(-2*{g:.3f}/{h}) "
                        f"too weak for the terminating tolerance")
                ok = err <= budget
            else:
                nxt = np.abs(vals[1:]) * h ** np.arange(1, hmax + 1)
                # optimal truncation; exact zeros are truncation artifacts
                masked = np.where(nxt > 0, nxt, np.inf)
                order_used = int(np.argmin(masked)) if np.isfinite(masked).any() else 0
                next_term = float(nxt[order_used])
                partial = complex(np.polyval(vals[:order_used + 1][::-1], h))
                err = abs(quad - partial)
                if tail > 0.5 * next_term:
                    raise QuadratureUnderresolved(
                        f"case {case.name}: contour tail {tail:.3e} overwhelms "
                        f"the next-term bound {next_term:.3e} at h = {h}")
                ok = err <= bound_factor * next_term
            results.append(QuadratureResult(
                name=case.name, terminating=case.terminating, h=float(h),
                quad=quad, partial=partial, order_used=order_used,
                next_term=next_term, error=float(err), ok=bool(ok)))
    return results


# ---------------------------------------------------------------------------
# Localized elements


@dataclass(frozen=True)
class LocalizedElement:
    """v_z(x) = (2 pi h)^{-n} e^{(i/h)(x-z) theta(x,z)} v(z) chi(z) det(d_zbar theta)."""

    w: Weight
    z: np.ndarray
    h: float
    delta: float
    v_value: complex
    chi_value: float
    margin: float
    domination_C: float

    def eval(self, x) -> np.ndarray:
        xs = _as_points(x, self.w.n)
        th = theta_pairs(self.w, xs, self.z[None, :])
        jac = theta_jacobian_pairs(self.w, xs, self.z[None, :])
        pairing = ((xs - self.z[None, :]) * th).sum(axis=1)
        pref = self.v_value * self.chi_value / (2.0 * np.pi * self.h) ** self.w.n
        return pref * np.exp(1j * pairing / self.h) * jac


def localized_element(v: TruncatedSeries, z, w: Weight, h: float,
                      delta: float | None = None, plateau: float | None = None,
                      support: float | None = None, n_samples: int = 4096,
                      seed: int = 0) -> LocalizedElement:
    """Construct the localized element at z and assert its domination bound.

    The sampled bound is phi(x) - phi(z) + Im((x-z) theta(x,z)) >= delta
    |x-z|^2 over the support region; its minimum margin must be positive.
    """
    z = np.asarray(z, dtype=complex).reshape(w.n)
    if v.nvars != w.n:
        raise ConfigInvalid(f"v has {v.nvars} variables, expected {w.n}")
    plateau = 0.6 * w.trust_radius if plateau is None else plateau
    support = 0.9 * w.trust_radius if support is None else support
    zdist = float(np.abs(z - w.base).max())
    if zdist >= w.trust_radius:
        raise ConfigInvalid("z lies outside the trust region")
    if zdist > plateau:
        raise ConfigInvalid("cutoff plateau does not cover z")
    if delta is None:
        pol = polarize(w)
        cmin, _ = quadratic_gap_estimate(w, pol, support, n_samples=2048, seed=seed)
        delta = 0.5 * cmin

    x = sobol_ball(w.n, support, n_samples, seed=seed) + w.base[None, :]
    sep2 = (np.abs(x - z[None, :]) ** 2).sum(axis=1)
    keep = sep2 > (1e-8 * support) ** 2
    th = theta_pairs(w, x[keep], z[None, :])
    pairing = ((x[keep] - z[None, :]) * th).sum(axis=1)
    ratio = (w.phi(x[keep]) - float(w.phi(z[None, :])[0]) + pairing.imag) / sep2[keep]
    margin = float(ratio.min()) - delta
    if margin <= 0.0:
        raise BadContour(
            f"localized element at {z} violates domination: margin {margin:.3e}")

    chi_value = float(radial_bump(np.array([zdist]), plateau, support)[0])
    v_value = complex(v.eval_grid((z - w.base)[None, :])[0])
    elem = LocalizedElement(w=w, z=z, h=float(h), delta=float(delta),
                            v_value=v_value, chi_value=chi_value, margin=margin,
                            domination_C=0.0)
    if v_value != 0:
        vals = np.abs(elem.eval(x)) * np.exp(-w.phi(x) / h)
        ref = (abs(v_value) * chi_value * h ** (-w.n)
               * math.exp(-float(w.phi(z[None, :])[0]) / h)
               * np.exp(-delta * sep2 / h))
        object.__setattr__(elem, "domination_C", float((vals / ref).max()))
    return elem
