"""Finsler metric catalog and pointwise tensor calculus.

A metric is described by a :class:`MetricSpec` drawn from a fixed catalog:

    euclidean                F(x, y) = |y|
    riemannian(a)            F(x, y) = sqrt(a_ij(x) y^i y^j)
    randers(a, b)            F(x, y) = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i
    conformal(base, sigma)   F(x, y) = exp(sigma(x)) F_base(x, y)

Coefficient fields come from the closed-form catalog in :mod:`.exprs`, so
every derivative below is taken exactly with nested forward-mode duals.
Finite differences appear only in the test suite, as an independent oracle.

Conventions.  All public entry points take the base point ``x`` and fiber
direction ``y`` as array_likes whose FIRST axis is the coordinate axis;
trailing axes broadcast as a batch.  Outputs carry batch axes first and
tensor index axes last.  Index placement follows the usual Finsler setup:

    g_ij(x, y)   = 1/2 d^2(F^2)/dy^i dy^j          (fundamental tensor)
    C_ijk        = 1/2 dg_ij/dy^k                   (Cartan torsion)
    gamma^i_jk   = 1/2 g^{is} (ds_k g_sj - ds_s g_jk + ds_j g_ks)
    N^i_j        = gamma^i_jk y^k - C^i_jk gamma^k_rs y^r y^s

with C^i_jk = g^{is} C_sjk.  The scaled connection N^i_j / F is
0-homogeneous in y and is the one used on the sphere bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dual as dm
from .dual import diff
from .errors import DirectionError, InvalidMetricError
from .exprs import ScalarExpr, const, expr_sum

_ID2 = ((const(1.0), const(0.0)), (const(0.0), const(1.0)))


@dataclass(frozen=True)
class MetricSpec:
    """Catalog entry describing one Finsler structure.

    Exactly the fields needed by the declared kind are set; the others stay
    None.  Instances are immutable and hashable, which lets grid-level
    tensor data be memoized per (metric, grid) pair.
    """

    kind: str
    dim: int
    a: tuple | None = None       # symmetric matrix of ScalarExpr
    b: tuple | None = None       # covector of ScalarExpr
    base: "MetricSpec | None" = None
    sigma: ScalarExpr | None = None


def euclidean(dim=2):
    return MetricSpec("euclidean", dim)


def identity_matrix_field(dim=2):
    if dim == 2:
        return _ID2
    zero = const(0.0)
    one = const(1.0)
    return tuple(tuple(one if i == j else zero for j in range(dim))
                 for i in range(dim))


def riemannian(a):
    a = tuple(tuple(row) for row in a)
    n = len(a)
    for row in a:
        if len(row) != n:
            raise InvalidMetricError("riemannian coefficient matrix must be square")
    for i in range(n):
        for j in range(i + 1, n):
            if a[i][j] != a[j][i]:
                raise InvalidMetricError(
                    "riemannian coefficient matrix must be symmetric")
    return MetricSpec("riemannian", n, a=a)


def randers(a, b):
    a = tuple(tuple(row) for row in a)
    b = tuple(b)
    if len(a) != len(b):
        raise InvalidMetricError("randers drift covector has wrong length")
    base = riemannian(a)
    return MetricSpec("randers", base.dim, a=base.a, b=b)


def conformal_wrap(base, sigma):
    """Catalog constructor for exp(sigma) * F_base.

    Nested wraps merge into a single layer with summed exponents, so
    wrapping twice builds the same spec as wrapping once with the sum.
    """
    if base.kind == "conformal" and isinstance(base.sigma, ScalarExpr) \
            and isinstance(sigma, ScalarExpr):
        return MetricSpec("conformal", base.dim, base=base.base,
                          sigma=expr_sum(base.sigma, sigma))
    return MetricSpec("conformal", base.dim, base=base, sigma=sigma)


# -- evaluation on dual-friendly component lists -----------------------------

def _quad(a, x, y):
    n = len(y)
    acc = 0.0
    for i in range(n):
        aii = a[i][i](x)
        acc = acc + aii * (y[i] * y[i])
        for j in range(i + 1, n):
            acc = acc + (2.0 * a[i][j](x)) * (y[i] * y[j])
    return acc


def _fsq(m, z):
    """F^2 on a flat variable list z = (*x, *y); dual-friendly."""
    n = m.dim
    x, y = z[:n], z[n:]
    if m.kind == "euclidean":
        acc = y[0] * y[0]
        for yi in y[1:]:
            acc = acc + yi * yi
        return acc
    if m.kind == "riemannian":
        return _quad(m.a, x, y)
    if m.kind == "randers":
        alpha = dm.sqrt(_quad(m.a, x, y))
        beta = 0.0
        for bi, yi in zip(m.b, y):
            beta = beta + bi(x) * yi
        f = alpha + beta
        return f * f
    if m.kind == "conformal":
        return dm.exp(2.0 * m.sigma(x)) * _fsq(m.base, z)
    raise InvalidMetricError(f"unknown metric kind {m.kind!r}")


def _fval(m, z):
    n = m.dim
    x, y = z[:n], z[n:]
    if m.kind == "randers":
        alpha = dm.sqrt(_quad(m.a, x, y))
        beta = 0.0
        for bi, yi in zip(m.b, y):
            beta = beta + bi(x) * yi
        return alpha + beta
    if m.kind == "conformal":
        return dm.exp(m.sigma(x)) * _fval(m.base, z)
    return dm.sqrt(_fsq(m, z))


# -- input handling and validity ---------------------------------------------

def _comps(v, n, what):
    if isinstance(v, (list, tuple)):
        comps = [np.asarray(c, dtype=float) for c in v]
    else:
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 0 or arr.shape[0] != n:
            raise DirectionError(
                f"{what} must have {n} components along the first axis")
        comps = [arr[i] for i in range(n)]
    if len(comps) != n:
        raise DirectionError(
            f"{what} must have {n} components along the first axis")
    return comps


def _numeric_matrix(a, x):
    n = len(a)
    batch = np.broadcast_shapes(*(np.shape(c) for c in x))
    out = np.empty(batch + (n, n))
    for i in range(n):
        for j in range(i, n):
            v = a[i][j](x)
            out[..., i, j] = v
            out[..., j, i] = v
    return out


def _assert_spd(mat, label):
    n = mat.shape[-1]
    if n == 2:
        ok = (mat[..., 0, 0] > 0) & (
            mat[..., 0, 0] * mat[..., 1, 1] - mat[..., 0, 1] ** 2 > 0)
        if not np.all(ok):
            raise InvalidMetricError(f"{label} is not positive definite")
        return
    w = np.linalg.eigvalsh(mat)
    if not np.all(w[..., 0] > 0):
        raise InvalidMetricError(f"{label} is not positive definite")


def validate_at(m, x):
    """Check catalog validity conditions at numeric base points."""
    if m.kind in ("riemannian", "randers"):
        amat = _numeric_matrix(m.a, x)
        _assert_spd(amat, "riemannian coefficient matrix a(x)")
        if m.kind == "randers":
            bvec = np.empty(amat.shape[:-1])
            for i, bi in enumerate(m.b):
                bvec[..., i] = bi(x)
            norm2 = np.einsum("...i,...i->...",
                              np.linalg.solve(amat, bvec[..., None])[..., 0],
                              bvec)
            if not np.all(norm2 < 1.0):
                raise InvalidMetricError(
                    "randers drift has a-norm >= 1 somewhere on the queried points")
    elif m.kind == "conformal":
        validate_at(m.base, x)


def _check_direction(y):
    sq = 0.0
    for c in y:
        sq = sq + np.asarray(c) ** 2
    if np.any(sq == 0.0):
        raise DirectionError("fiber direction y must be nonzero")


def _prep(m, x, y):
    xc = _comps(x, m.dim, "x")
    yc = _comps(y, m.dim, "y")
    validate_at(m, xc)
    _check_direction(yc)
    return xc, yc


def _batch_shape(comps):
    return np.broadcast_shapes(*(np.shape(c) for c in comps))


# -- public tensor operations -------------------------------------------------

def eval_F(m, x, y):
    """Finsler norm F(x, y); positively 1-homogeneous in y."""
    xc, yc = _prep(m, x, y)
    out = _fval(m, xc + yc)
    return np.asarray(out, dtype=float)


def _metric_from(fsq_fn, z, n, batch):
    g = np.empty(batch + (n, n))
    for i in range(n):
        for j in range(i, n):
            v = diff(diff(fsq_fn, n + i), n + j)(z)
            g[..., i, j] = np.asarray(v) * 0.5
            g[..., j, i] = g[..., i, j]
    return g


def fundamental_tensor(m, x, y):
    """g_ij(x, y) = half Hessian of F^2 in y; raises if not positive definite."""
    xc, yc = _prep(m, x, y)
    z = xc + yc
    batch = _batch_shape(z)
    g = _metric_from(lambda w: _fsq(m, w), z, m.dim, batch)
    _assert_spd(g, "fundamental tensor g(x, y)")
    return g


def cartan_tensor(m, x, y):
    """Totally symmetric C_ijk = quarter third y-derivative of F^2."""
    xc, yc = _prep(m, x, y)
    z = xc + yc
    n = m.dim
    batch = _batch_shape(z)
    fsq_fn = lambda w: _fsq(m, w)
    C = np.empty(batch + (n, n, n))
    for i in range(n):
        for j in range(i, n):
            dij = diff(diff(fsq_fn, n + i), n + j)
            for k in range(j, n):
                v = np.asarray(diff(dij, n + k)(z)) * 0.25
                for p, q, r in {(i, j, k), (i, k, j), (j, i, k),
                                (j, k, i), (k, i, j), (k, j, i)}:
                    C[..., p, q, r] = v
    return C


def _dg_dx(m, z, n, batch):
    """D[..., k, i, j] = d g_ij / d x^k, exact."""
    fsq_fn = lambda w: _fsq(m, w)
    D = np.empty(batch + (n, n, n))
    for i in range(n):
        for j in range(i, n):
            dij = diff(diff(fsq_fn, n + i), n + j)
            for k in range(n):
                v = np.asarray(diff(dij, k)(z)) * 0.5
                D[..., k, i, j] = v
                D[..., k, j, i] = v
    return D


def formal_christoffel(m, x, y):
    """gamma^i_jk of the fundamental tensor; symmetric in (j, k)."""
    xc, yc = _prep(m, x, y)
    z = xc + yc
    n = m.dim
    batch = _batch_shape(z)
    g = _metric_from(lambda w: _fsq(m, w), z, n, batch)
    _assert_spd(g, "fundamental tensor g(x, y)")
    g_inv = np.linalg.inv(g)
    D = _dg_dx(m, z, n, batch)
    return _christoffel_from(g_inv, D)


def _christoffel_from(g_inv, D):
    # A_sjk = ds_k g_sj - ds_s g_jk + ds_j g_ks
    A = (np.einsum("...ksj->...sjk", D)
         - np.einsum("...sjk->...sjk", D)
         + np.einsum("...jks->...sjk", D))
    return 0.5 * np.einsum("...is,...sjk->...ijk", g_inv, A)


def _nonlinear_from(g_inv, C, gamma, yv, F):
    Cup = np.einsum("...is,...sjk->...ijk", g_inv, C)
    gyy = np.einsum("...krs,...r,...s->...k", gamma, yv, yv)
    N = (np.einsum("...ijk,...k->...ij", gamma, yv)
         - np.einsum("...ijk,...k->...ij", Cup, gyy))
    return N, N / F[..., None, None]


def nonlinear_connection(m, x, y):
    """Nonlinear connection N^i_j and its 0-homogeneous scaling N^i_j / F."""
    tp = tensor_point(m, x, y)
    return tp.nonlin, tp.nonlin_scaled


@dataclass
class TensorPoint:
    """All pointwise tensors of a metric at (x, y), computed in one pass.

    Batch axes lead, index axes trail; ``x`` and ``y`` are stored with the
    coordinate axis last.
    """

    x: np.ndarray
    y: np.ndarray
    F: np.ndarray
    l_up: np.ndarray
    l_down: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    cartan: np.ndarray
    gamma: np.ndarray
    nonlin: np.ndarray
    nonlin_scaled: np.ndarray

    @property
    def dim(self):
        return self.g.shape[-1]


def tensor_point(m, x, y):
    """Evaluate F, l, g, g^{-1}, C, gamma, and N at (x, y) sharing work."""
    xc, yc = _prep(m, x, y)
    z = xc + yc
    n = m.dim
    batch = _batch_shape(z)
    fsq_fn = lambda w: _fsq(m, w)

    F = np.broadcast_to(np.asarray(_fval(m, z), dtype=float), batch).copy()

    g = np.empty(batch + (n, n))
    C = np.empty(batch + (n, n, n))
    D = np.empty(batch + (n, n, n))
    for i in range(n):
        for j in range(i, n):
            dij = diff(diff(fsq_fn, n + i), n + j)
            v = np.asarray(dij(z)) * 0.5
            g[..., i, j] = v
            g[..., j, i] = v
            for k in range(j, n):
                w = np.asarray(diff(dij, n + k)(z)) * 0.25
                for p, q, r in {(i, j, k), (i, k, j), (j, i, k),
                                (j, k, i), (k, i, j), (k, j, i)}:
                    C[..., p, q, r] = w
            for k in range(n):
                w = np.asarray(diff(dij, k)(z)) * 0.5
                D[..., k, i, j] = w
                D[..., k, j, i] = w

    _assert_spd(g, "fundamental tensor g(x, y)")
    g_inv = np.linalg.inv(g)

    yv = np.empty(batch + (n,))
    xv = np.empty(batch + (n,))
    for i in range(n):
        yv[..., i] = yc[i]
        xv[..., i] = xc[i]

    l_up = yv / F[..., None]
    l_down = np.einsum("...ij,...j->...i", g, l_up)

    gamma = _christoffel_from(g_inv, D)
    N, N_scaled = _nonlinear_from(g_inv, C, gamma, yv, F)

    return TensorPoint(x=xv, y=yv, F=F, l_up=l_up, l_down=l_down, g=g,
                       g_inv=g_inv, cartan=C, gamma=gamma, nonlin=N,
                       nonlin_scaled=N_scaled)
