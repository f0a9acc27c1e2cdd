"""Forward-mode differentiation with nestable dual numbers.

A ``Dual`` carries a value and one directional derivative.  Coefficients may
be floats, numpy arrays (for batched evaluation over grids), or further
``Dual`` instances.  Nesting gives exact higher-order derivatives: wrapping
every input variable once per differentiation level keeps all duals at a
meeting point at the same depth, so no perturbation bookkeeping is needed.

``diff(f, i)`` returns the function computing the exact partial of ``f``
with respect to its i-th input.  Composing ``diff`` yields mixed partials.
"""

from __future__ import annotations

import numpy as np


class Dual:
    """Number of the form re + eps * d, with d^2 = 0."""

    __slots__ = ("re", "eps")

    # keep numpy from consuming Duals elementwise in mixed expressions
    __array_ufunc__ = None

    def __init__(self, re, eps=0.0):
        self.re = re
        self.eps = eps

    def __repr__(self):
        return f"Dual({self.re!r}, {self.eps!r})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re + other.re, self.eps + other.eps)
        return Dual(self.re + other, self.eps)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.re, -self.eps)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re - other.re, self.eps - other.eps)
        return Dual(self.re - other, self.eps)

    def __rsub__(self, other):
        return Dual(other - self.re, -self.eps)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re * other.re,
                        self.re * other.eps + self.eps * other.re)
        return Dual(self.re * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.re / other.re
            return Dual(q, (self.eps - q * other.eps) / other.re)
        return Dual(self.re / other, self.eps / other)

    def __rtruediv__(self, other):
        q = other / self.re
        return Dual(q, -q * self.eps / self.re)

    def __pow__(self, p):
        # real exponent only; used on strictly positive quantities
        if isinstance(p, Dual):
            raise TypeError("dual exponents are not supported")
        r = self.re ** p
        return Dual(r, self.eps * (p * self.re ** (p - 1)))


def value(v):
    """Strip all dual layers, returning the underlying float or array."""
    while isinstance(v, Dual):
        v = v.re
    return v


def lift(vs, i):
    """Wrap every entry of ``vs`` one dual level, seeding entry ``i``."""
    return [Dual(v, 1.0 if j == i else 0.0) for j, v in enumerate(vs)]


def diff(f, i):
    """Exact partial derivative operator for f(list_of_scalars) -> scalar."""

    def df(zs):
        out = f(lift(list(zs), i))
        return out.eps if isinstance(out, Dual) else 0.0 * value(out)

    return df


# -- elementary functions that accept floats, arrays, or duals --------------

def sqrt(v):
    if isinstance(v, Dual):
        r = sqrt(v.re)
        return Dual(r, v.eps * (0.5 / r))
    return np.sqrt(v)


def exp(v):
    if isinstance(v, Dual):
        e = exp(v.re)
        return Dual(e, v.eps * e)
    return np.exp(v)


def log(v):
    if isinstance(v, Dual):
        return Dual(log(v.re), v.eps / v.re)
    return np.log(v)


def sin(v):
    if isinstance(v, Dual):
        return Dual(sin(v.re), v.eps * cos(v.re))
    return np.sin(v)


def cos(v):
    if isinstance(v, Dual):
        return Dual(cos(v.re), -(v.eps * sin(v.re)))
    return np.cos(v)


def atan2(y, x):
    if not isinstance(y, Dual) and not isinstance(x, Dual):
        return np.arctan2(y, x)
    if not isinstance(y, Dual):
        y = Dual(y, 0.0)
    if not isinstance(x, Dual):
        x = Dual(x, 0.0)
    denom = x.re * x.re + y.re * y.re
    return Dual(atan2(y.re, x.re),
                (x.re * y.eps - y.re * x.eps) / denom)
