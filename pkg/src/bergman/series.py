"""Truncated multivariate power series over complex coefficients.

A series is a finite dict mapping exponent tuples to complex coefficients,
truncated at a fixed total degree ``maxdeg``.  All arithmetic stays inside
the truncation: products drop terms whose total degree exceeds the bound of
the result ring, so every operation is exact arithmetic on the retained jet.

Series are value objects: operations return new instances and never mutate
their operands.  Coefficient dicts are plain dicts for speed; treat them as
frozen.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    BadVariable,
    NonzeroConstantTerm,
    VariableMismatch,
    ZeroConstantTerm,
)

# An exponent vector: one nonnegative integer per ambient variable.
MultiIndex = tuple[int, ...]


def total_degree(mi: MultiIndex) -> int:
    return sum(mi)


class TruncatedSeries:
    __slots__ = ("nvars", "maxdeg", "coeffs")

    def __init__(self, nvars: int, maxdeg: int,
                 coeffs: dict[MultiIndex, complex] | None = None,
                 _checked: bool = False):
        if nvars < 1:
            raise BadVariable(f"need at least one variable, got {nvars}")
        if maxdeg < 0:
            raise ValueError(f"maxdeg must be nonnegative, got {maxdeg}")
        self.nvars = nvars
        self.maxdeg = maxdeg
        if coeffs is None:
            self.coeffs = {}
        elif _checked:
            self.coeffs = coeffs
        else:
            clean: dict[MultiIndex, complex] = {}
            for mi, c in coeffs.items():
                mi = tuple(int(k) for k in mi)
                if len(mi) != nvars:
                    raise BadVariable(
                        f"exponent vector {mi} has length {len(mi)}, ring has {nvars} variables")
                if any(k < 0 for k in mi):
                    raise BadVariable(f"negative exponent in {mi}")
                c = complex(c)
                if sum(mi) <= maxdeg and c != 0.0:
                    clean[mi] = clean.get(mi, 0.0) + c
            self.coeffs = clean

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int, maxdeg: int) -> "TruncatedSeries":
        return cls(nvars, maxdeg, {}, _checked=True)

    @classmethod
    def constant(cls, value: complex, nvars: int, maxdeg: int) -> "TruncatedSeries":
        value = complex(value)
        if value == 0.0:
            return cls.zero(nvars, maxdeg)
        return cls(nvars, maxdeg, {(0,) * nvars: value}, _checked=True)

    @classmethod
    def variable(cls, index: int, nvars: int, maxdeg: int) -> "TruncatedSeries":
        if not 0 <= index < nvars:
            raise BadVariable(f"variable index {index} outside ring of {nvars} variables")
        if maxdeg < 1:
            return cls.zero(nvars, maxdeg)
        mi = tuple(1 if i == index else 0 for i in range(nvars))
        return cls(nvars, maxdeg, {mi: 1.0 + 0.0j}, _checked=True)

    @classmethod
    def from_triples(cls, triples: Iterable[Sequence], nvars: int, maxdeg: int) -> "TruncatedSeries":
        """Build from the portable form: (exponent-vector, re, im) triples."""
        coeffs: dict[MultiIndex, complex] = {}
        for mi, re, im in triples:
            mi = tuple(int(k) for k in mi)
            coeffs[mi] = coeffs.get(mi, 0.0) + complex(float(re), float(im))
        return cls(nvars, maxdeg, coeffs)

    def to_triples(self) -> list[list]:
        """Portable text form, canonically ordered for byte-stable output."""
        out = []
        for mi in sorted(self.coeffs):
            c = self.coeffs[mi]
            out.append([list(mi), c.real, c.imag])
        return out

    # -- inspection -------------------------------------------------------------

    def coeff(self, mi: Sequence[int]) -> complex:
        return self.coeffs.get(tuple(mi), 0.0 + 0.0j)

    @property
    def constant_term(self) -> complex:
        return self.coeffs.get((0,) * self.nvars, 0.0 + 0.0j)

    def is_zero(self) -> bool:
        return not self.coeffs

    def max_abs(self) -> float:
        """Largest coefficient magnitude (0.0 for the zero series)."""
        if not self.coeffs:
            return 0.0
        return max(abs(c) for c in self.coeffs.values())

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        head = ", ".join(f"{mi}:{c:.3g}" for mi, c in sorted(self.coeffs.items())[:4])
        tail = ", ..." if len(self.coeffs) > 4 else ""
        return f"TruncatedSeries(nvars={self.nvars}, maxdeg={self.maxdeg}, {{{head}{tail}}})"

    def _require_same_ring(self, other: "TruncatedSeries") -> None:
        if self.nvars != other.nvars:
            raise VariableMismatch(
                f"operands have {self.nvars} and {other.nvars} variables")

    # -- ring operations ----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = TruncatedSeries.constant(other, self.nvars, self.maxdeg)
        self._require_same_ring(other)
        deg = min(self.maxdeg, other.maxdeg)
        out = {mi: c for mi, c in self.coeffs.items() if sum(mi) <= deg}
        for mi, c in other.coeffs.items():
            if sum(mi) <= deg:
                s = out.get(mi, 0.0) + c
                if s == 0.0:
                    out.pop(mi, None)
                else:
                    out[mi] = s
        return TruncatedSeries(self.nvars, deg, out, _checked=True)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.nvars, self.maxdeg,
                               {mi: -c for mi, c in self.coeffs.items()}, _checked=True)

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = TruncatedSeries.constant(other, self.nvars, self.maxdeg)
        return self.__add__(-other)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            other = complex(other)
            if other == 0.0:
                return TruncatedSeries.zero(self.nvars, self.maxdeg)
            return TruncatedSeries(self.nvars, self.maxdeg,
                                   {mi: c * other for mi, c in self.coeffs.items()},
                                   _checked=True)
        self._require_same_ring(other)
        deg = min(self.maxdeg, other.maxdeg)
        # Iterate the sparser operand outermost.
        a, b = self.coeffs, other.coeffs
        if len(a) > len(b):
            a, b = b, a
        out: dict[MultiIndex, complex] = {}
        bitems = [(mi, sum(mi), c) for mi, c in b.items() if sum(mi) <= deg]
        for mia, ca in a.items():
            da = sum(mia)
            if da > deg:
                continue
            room = deg - da
            for mib, db, cb in bitems:
                if db > room:
                    continue
                mi = tuple(p + q for p, q in zip(mia, mib))
                s = out.get(mi, 0.0) + ca * cb
                if s == 0.0:
                    out.pop(mi, None)
                else:
                    out[mi] = s
        return TruncatedSeries(self.nvars, deg, out, _checked=True)

    __rmul__ = __mul__

    def truncate(self, maxdeg: int) -> "TruncatedSeries":
        """Restrict to total degree <= maxdeg (may also raise the bound)."""
        if maxdeg >= self.maxdeg:
            return TruncatedSeries(self.nvars, maxdeg, dict(self.coeffs), _checked=True)
        out = {mi: c for mi, c in self.coeffs.items() if sum(mi) <= maxdeg}
        return TruncatedSeries(self.nvars, maxdeg, out, _checked=True)

    def filter(self, keep: Callable[[MultiIndex], bool]) -> "TruncatedSeries":
        out = {mi: c for mi, c in self.coeffs.items() if keep(mi)}
        return TruncatedSeries(self.nvars, self.maxdeg, out, _checked=True)

    # -- calculus -------------------------------------------------------------------

    def diff(self, var: int) -> "TruncatedSeries":
        """Partial derivative; the truncation degree drops by one."""
        if not 0 <= var < self.nvars:
            raise BadVariable(f"variable index {var} outside ring of {self.nvars} variables")
        deg = max(self.maxdeg - 1, 0)
        out: dict[MultiIndex, complex] = {}
        for mi, c in self.coeffs.items():
            k = mi[var]
            if k == 0:
                continue
            dmi = mi[:var] + (k - 1,) + mi[var + 1:]
            if sum(dmi) <= deg:
                out[dmi] = c * k
        return TruncatedSeries(self.nvars, deg, out, _checked=True)

    def substitute(self, subs: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        """Compose: replace variable i by subs[i].

        Every substituted series must vanish at the origin so the composition
        stays centered; the result is truncated at the smallest degree bound
        among self and the substituted series.
        """
        if len(subs) != self.nvars:
            raise VariableMismatch(
                f"{self.nvars} variables but {len(subs)} substituted series")
        nv = subs[0].nvars
        deg = self.maxdeg
        for s in subs:
            if s.nvars != nv:
                raise VariableMismatch("substituted series live in different rings")
            if s.constant_term != 0.0:
                raise NonzeroConstantTerm("substituted series must have zero constant term")
            deg = min(deg, s.maxdeg)
        one = TruncatedSeries.constant(1.0, nv, deg)
        # Memoize powers of each substituted series.
        pows: list[list[TruncatedSeries]] = [[one] for _ in range(self.nvars)]
        out = TruncatedSeries.zero(nv, deg)
        for mi in sorted(self.coeffs, key=total_degree):
            c = self.coeffs[mi]
            term = None
            for i, k in enumerate(mi):
                if k == 0:
                    continue
                while len(pows[i]) <= k:
                    pows[i].append(pows[i][-1] * subs[i].truncate(deg))
                pk = pows[i][k]
                term = pk if term is None else term * pk
            if term is None:
                out = out + TruncatedSeries.constant(c, nv, deg)
            else:
                out = out + term * c
        return out

    def rename(self, new_positions: Sequence[int], nvars_new: int) -> "TruncatedSeries":
        """Exponent remap: old variable i becomes variable new_positions[i].

        Faster than substitute for pure relabelings/embeddings.  Distinct old
        variables may map to the same new one (exponents add).
        """
        if len(new_positions) != self.nvars:
            raise VariableMismatch("need one target position per variable")
        for p in new_positions:
            if not 0 <= p < nvars_new:
                raise BadVariable(f"target position {p} outside ring of {nvars_new} variables")
        out: dict[MultiIndex, complex] = {}
        for mi, c in self.coeffs.items():
            new = [0] * nvars_new
            for i, k in enumerate(mi):
                new[new_positions[i]] += k
            key = tuple(new)
            s = out.get(key, 0.0) + c
            if s == 0.0:
                out.pop(key, None)
            else:
                out[key] = s
        return TruncatedSeries(nvars_new, self.maxdeg, out, _checked=True)

    def invert(self) -> "TruncatedSeries":
        """Multiplicative inverse by Newton iteration; needs a nonzero constant term."""
        c0 = self.constant_term
        if c0 == 0.0:
            raise ZeroConstantTerm("cannot invert a series vanishing at the origin")
        inv = TruncatedSeries.constant(1.0 / c0, self.nvars, self.maxdeg)
        # Each step doubles the number of correct orders.
        steps = max(1, (self.maxdeg + 1).bit_length())
        two = TruncatedSeries.constant(2.0, self.nvars, self.maxdeg)
        for _ in range(steps):
            inv = inv * (two - self * inv)
        return inv

    # -- evaluation --------------------------------------------------------------

    def eval(self, point: Sequence[complex]) -> complex:
        if len(point) != self.nvars:
            raise VariableMismatch(
                f"point has {len(point)} coordinates, ring has {self.nvars} variables")
        z = [complex(p) for p in point]
        acc = 0.0 + 0.0j
        for mi, c in sorted(self.coeffs.items(), key=lambda t: total_degree(t[0])):
            v = c
            for zi, k in zip(z, mi):
                if k:
                    v *= zi ** k
            acc += v
        return acc

    def eval_grid(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at many points; ``points`` has shape (m, nvars)."""
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[1] != self.nvars:
            raise VariableMismatch(
                f"points have {pts.shape[1]} coordinates, ring has {self.nvars} variables")
        m = pts.shape[0]
        if not self.coeffs:
            return np.zeros(m, dtype=complex)
        # Power tables per variable up to the largest exponent actually used.
        kmax = [0] * self.nvars
        for mi in self.coeffs:
            for i, k in enumerate(mi):
                if k > kmax[i]:
                    kmax[i] = k
        pw = []
        for i in range(self.nvars):
            tab = np.ones((kmax[i] + 1, m), dtype=complex)
            for k in range(1, kmax[i] + 1):
                tab[k] = tab[k - 1] * pts[:, i]
            pw.append(tab)
        acc = np.zeros(m, dtype=complex)
        for mi, c in self.coeffs.items():
            v = None
            for i, k in enumerate(mi):
                if k:
                    v = pw[i][k].copy() if v is None else v * pw[i][k]
            acc += c if v is None else c * v
        return acc

    def eval_bilinear(self, u_vals: np.ndarray, v_vals: np.ndarray) -> np.ndarray:
        """Product-grid evaluation of a 2-variable series as U A V^T.

        Returns shape (len(u_vals), len(v_vals)); much cheaper than calling
        eval_grid on all pairs when both axes are large.
        """
        if self.nvars != 2:
            raise VariableMismatch(
                f"bilinear evaluation needs a 2-variable series, ring has {self.nvars}")
        u = np.asarray(u_vals, dtype=complex).reshape(-1)
        v = np.asarray(v_vals, dtype=complex).reshape(-1)
        if not self.coeffs:
            return np.zeros((u.size, v.size), dtype=complex)
        du = max(mi[0] for mi in self.coeffs)
        dv = max(mi[1] for mi in self.coeffs)
        A = np.zeros((du + 1, dv + 1), dtype=complex)
        for (a, b), c in self.coeffs.items():
            A[a, b] = c
        U = np.ones((u.size, du + 1), dtype=complex)
        for k in range(1, du + 1):
            U[:, k] = U[:, k - 1] * u
        V = np.ones((v.size, dv + 1), dtype=complex)
        for k in range(1, dv + 1):
            V[:, k] = V[:, k - 1] * v
        return (U @ A) @ V.T


def max_abs_diff(a: TruncatedSeries, b: TruncatedSeries) -> float:
    """Sup-norm of coefficient differences on the common truncation."""
    a._require_same_ring(b)
    deg = min(a.maxdeg, b.maxdeg)
    keys = set(a.coeffs) | set(b.coeffs)
    worst = 0.0
    for mi in keys:
        if sum(mi) > deg:
            continue
        d = abs(a.coeffs.get(mi, 0.0) - b.coeffs.get(mi, 0.0))
        if d > worst:
            worst = d
    return worst


class HGradedSeries:
    """A polynomial in the small parameter h with series coefficients.

    ``terms[j]`` multiplies h**j; all members share the ambient ring.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[TruncatedSeries]):
        terms = list(terms)
        if not terms:
            raise ValueError("need at least the h^0 term")
        nv, deg = terms[0].nvars, terms[0].maxdeg
        for t in terms[1:]:
            if t.nvars != nv or t.maxdeg != deg:
                raise VariableMismatch("h-graded terms must share nvars and maxdeg")
        self.terms = terms

    @property
    def hmax(self) -> int:
        return len(self.terms) - 1

    @property
    def nvars(self) -> int:
        return self.terms[0].nvars

    @property
    def maxdeg(self) -> int:
        return self.terms[0].maxdeg

    def coefficient(self, j: int) -> TruncatedSeries:
        if j >= len(self.terms):
            return TruncatedSeries.zero(self.nvars, self.maxdeg)
        return self.terms[j]

    def eval(self, point: Sequence[complex], h: float) -> complex:
        acc = 0.0 + 0.0j
        hp = 1.0
        for t in self.terms:
            acc += hp * t.eval(point)
            hp *= h
        return acc

    @classmethod
    def from_constant(cls, value: complex, nvars: int, maxdeg: int, hmax: int = 0):
        terms = [TruncatedSeries.constant(value, nvars, maxdeg)]
        terms += [TruncatedSeries.zero(nvars, maxdeg) for _ in range(hmax)]
        return cls(terms)
