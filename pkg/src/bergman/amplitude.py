"""Formal stationary phase on good contours and the amplitude equation.

The fast integral h^{-n} * int exp(2 phi / h) u dx dyt over a good contour
has a complete formal expansion.  Writing the phase as u^T B v plus a
remainder R of fast order >= 3, the expansion is generated by the pairing
operator

    exp(PAIRING_H * h * <d_u, B^{-T} d_v>)

applied to u(y+u, xt+v) * exp((2/h) R), evaluated at u = v = 0.  Retained
diagrams with p pairings and q remainder insertions carry h^(p-q); full
contraction forces 2p >= 3q, so each h-order is a finite sum.

The two normalization constants are not free: they are calibrated once
against the exact Gaussian contour integral (weight |x|^2/2, for which the
order-zero value is pi in one variable) and then frozen.  The 2D quadrature
oracle in the oracle module guards both numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDegree
from .phase import PhaseData
from .quadrature import sobol_ball
from .series import HGradedSeries, TruncatedSeries

# Coefficient of h <d_u, B^{-T} d_v> in the pairing exponent, and the
# order-zero factor c0 = LEADING_NUM^n / det B.  Calibrated on the Gaussian
# closed form; do not change one without the other.
PAIRING_H = -0.5
LEADING_NUM = math.pi / 2.0


def _series_det(mat: list[list[TruncatedSeries]]) -> TruncatedSeries:
    n = len(mat)
    if n == 1:
        return mat[0][0]
    if n == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    acc = None
    for k in range(n):
        minor = [[mat[i][j] for j in range(n) if j != k] for i in range(1, n)]
        term = mat[0][k] * _series_det(minor)
        if k % 2 == 1:
            term = -term
        acc = term if acc is None else acc + term
    return acc


def _series_matrix_inverse(mat: list[list[TruncatedSeries]]) -> list[list[TruncatedSeries]]:
    """Adjugate over determinant; fine for the small n used here."""
    n = len(mat)
    det_inv = _series_det(mat).invert()
    if n == 1:
        return [[det_inv]]
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[mat[r][c] for c in range(n) if c != i]
                     for r in range(n) if r != j]
            cof = _series_det(minor)
            if (i + j) % 2 == 1:
                cof = -cof
            out[i][j] = cof * det_inv
    return out


@dataclass
class Amplitude:
    """Solution of the amplitude equation up to the requested order."""

    n: int
    order: int
    coeffs: list                  # TruncatedSeries in (x, yt), common maxdeg
    c0: TruncatedSeries           # leading stationary-phase factor in (y, xt)
    growth_C: float | None = None
    growth_profile: list = field(default_factory=list)

    @property
    def maxdeg(self) -> int:
        return self.coeffs[0].maxdeg

    def as_graded(self) -> HGradedSeries:
        return HGradedSeries(self.coeffs)


@dataclass(frozen=True)
class RealizedSymbol:
    series: TruncatedSeries
    cutoff: int
    h: float


class ExpansionTermOps:
    """The operators T_j of the formal stationary-phase expansion.

    T_0 restricts to the critical point; for j >= 1, T_j collects every
    diagram with p = j + q pairings against q remainder insertions.  Inputs
    are series in the outgoing variables (x, yt); outputs are series in the
    slow variables (y, xt) at the same common truncation degree.
    """

    def __init__(self, pd: PhaseData, hmax: int):
        self.n = pd.n
        self.hmax = hmax
        n = pd.n
        self.slow_deg = max(pd.maxdeg - 2, 0)

        binv = _series_matrix_inverse(pd.quad_B)
        det_b = _series_det(pd.quad_B)
        self.c0 = (LEADING_NUM ** n) * det_b.invert()

        # Lift B^{-1} entries into the (y, xt, u, v) ring for the pairings.
        slow_pos = list(range(2 * n))
        self.binv_big = [[binv[j][k].rename(slow_pos, 4 * n)
                          for k in range(n)] for j in range(n)]

        self._remainder = pd.remainder
        self._rpow: list[TruncatedSeries] = [
            TruncatedSeries.constant(1.0, 4 * n, pd.maxdeg)]

        deg = self.slow_deg
        self._lift_subs = []
        for j in range(n):
            self._lift_subs.append(
                TruncatedSeries.variable(j, 4 * n, deg)
                + TruncatedSeries.variable(2 * n + j, 4 * n, deg))
        for j in range(n):
            self._lift_subs.append(
                TruncatedSeries.variable(n + j, 4 * n, deg)
                + TruncatedSeries.variable(3 * n + j, 4 * n, deg))

    # -- helpers -------------------------------------------------------------

    def _remainder_power(self, q: int) -> TruncatedSeries:
        while len(self._rpow) <= q:
            self._rpow.append(self._rpow[-1] * self._remainder)
        return self._rpow[q]

    def _lift(self, f: TruncatedSeries) -> TruncatedSeries:
        """f(x, yt) -> f(y + u, xt + v) in the big ring."""
        return f.truncate(min(f.maxdeg, self.slow_deg)).substitute(self._lift_subs)

    def _u_deg(self, mi) -> int:
        return sum(mi[2 * self.n:3 * self.n])

    def _v_deg(self, mi) -> int:
        return sum(mi[3 * self.n:])

    def _pair_once(self, s: TruncatedSeries) -> TruncatedSeries:
        n = self.n
        acc = None
        for j in range(n):
            for k in range(n):
                d = s.diff(2 * n + k).diff(3 * n + j)
                if d.is_zero():
                    continue
                term = self.binv_big[j][k] * d
                acc = term if acc is None else acc + term
        if acc is None:
            return TruncatedSeries.zero(4 * n, max(s.maxdeg - 2, 0))
        return acc

    def _project_slow(self, s: TruncatedSeries) -> TruncatedSeries:
        n = self.n
        kept = s.filter(lambda mi: self._u_deg(mi) == 0 and self._v_deg(mi) == 0)
        return kept.rename(list(range(2 * n)) + [0] * (2 * n), 2 * n)

    # -- the operators ---------------------------------------------------------

    def apply(self, j: int, f: TruncatedSeries) -> TruncatedSeries:
        """T_j f as a series in the slow variables."""
        if j == 0:
            return f.truncate(min(f.maxdeg, self.slow_deg)).truncate(self.slow_deg)
        fc = self._lift(f)
        total = TruncatedSeries.zero(2 * self.n, self.slow_deg)
        for q in range(0, 2 * j + 1):
            p = j + q
            rq = self._remainder_power(q)
            if q > 0 and rq.is_zero():
                break
            # Only fully contractible terms survive: u- and v-degree both p.
            fa = fc.filter(lambda mi: self._u_deg(mi) <= p and self._v_deg(mi) <= p)
            rb = rq.filter(lambda mi: self._u_deg(mi) <= p and self._v_deg(mi) <= p)
            if fa.is_zero() or rb.is_zero():
                continue
            g = (fa * rb).filter(
                lambda mi: self._u_deg(mi) == p and self._v_deg(mi) == p)
            if g.is_zero():
                continue
            for _ in range(p):
                g = self._pair_once(g)
            coef = (2.0 ** q) * (PAIRING_H ** p) / (
                math.factorial(q) * math.factorial(p))
            total = total + self._project_slow(g).truncate(self.slow_deg) * coef
        return total


def formal_expansion(pd: PhaseData, u: HGradedSeries, hmax: int) -> HGradedSeries:
    """Expansion of the fast contour integral applied to the symbol u.

    Returns c0(y, xt) * sum_j h^j (T_j u)(y, xt) collected by total h-order,
    including the h-grading already present in u.
    """
    if u.nvars != 2 * pd.n:
        raise InsufficientDegree(
            f"symbol has {u.nvars} variables, phase expects {2 * pd.n}")
    if u.maxdeg < 2 * hmax + 2:
        raise InsufficientDegree(
            f"symbol maxdeg {u.maxdeg} below the budget 2*hmax+2 = {2 * hmax + 2}")
    ops = ExpansionTermOps(pd, hmax)
    deg = min(ops.slow_deg, u.maxdeg)
    c0 = ops.c0.truncate(deg)
    out = []
    for m in range(hmax + 1):
        acc = TruncatedSeries.zero(2 * pd.n, deg)
        for k in range(0, min(m, u.hmax) + 1):
            tj = ops.apply(m - k, u.coefficient(k))
            acc = acc + tj.truncate(deg)
        out.append((c0 * acc).truncate(deg))
    return HGradedSeries(out)


def solve_amplitude(pd: PhaseData, order: int) -> Amplitude:
    """Solve (expansion of a) = 1 order by order.

    The order-zero equation fixes a0 as the reciprocal of c0; each higher
    order cancels the lower-order diagrams:  a_m = -sum_{j=1..m} T_j a_{m-j}.
    Requires the phase resolved to total degree 2*order + 4.
    """
    budget = 2 * order + 4
    if pd.maxdeg < budget:
        raise InsufficientDegree(
            f"phase maxdeg {pd.maxdeg} below the budget 2N+4 = {budget} for order {order}")
    ops = ExpansionTermOps(pd, order)
    coeffs = [ops.c0.invert()]
    for m in range(1, order + 1):
        acc = TruncatedSeries.zero(2 * pd.n, ops.slow_deg)
        for j in range(1, m + 1):
            acc = acc - ops.apply(j, coeffs[m - j])
        coeffs.append(acc)
    return Amplitude(n=pd.n, order=order, coeffs=coeffs, c0=ops.c0)


def estimate_growth(amp: Amplitude, region_radius: float,
                    n_samples: int = 512, seed: int = 0) -> float:
    """Fit the factorial-type bound sup|a_k| <= C^(k+1) k^k on the region.

    Returns twice the fitted constant (safety margin) and stores the
    normalized sequence (sup|a_k| / k^k)^(1/(k+1)) on the amplitude for
    band diagnostics.
    """
    pts = sobol_ball(2 * amp.n, region_radius, n_samples, seed=seed)
    profile = []
    for k, ak in enumerate(amp.coeffs):
        sup = float(np.abs(ak.eval_grid(pts)).max()) if not ak.is_zero() else 0.0
        kk = 1.0 if k == 0 else float(k) ** k
        profile.append((sup / kk) ** (1.0 / (k + 1)))
    c_fit = max(profile) if profile else 0.0
    amp.growth_C = 2.0 * c_fit
    amp.growth_profile = profile
    return amp.growth_C


def realize(amp: Amplitude, h: float) -> RealizedSymbol:
    """Sum a_k h^k for k <= min(order, floor(1 /(C e h))).

    Falls back to the full order when no growth constant has been estimated
    (the k = 0 term is always retained).
    """
    if amp.growth_C and amp.growth_C > 0.0:
        cutoff = int(math.floor(1.0 / (amp.growth_C * math.e * h)))
        cutoff = min(amp.order, max(cutoff, 0))
    else:
        cutoff = amp.order
    acc = TruncatedSeries.zero(2 * amp.n, amp.maxdeg)
    hp = 1.0
    for k in range(cutoff + 1):
        acc = acc + amp.coeffs[k] * hp
        hp *= h
    return RealizedSymbol(series=acc, cutoff=cutoff, h=float(h))
