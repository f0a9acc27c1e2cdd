"""Built-in verification suite.

A fixed battery of fast checks with frozen seeds and tolerances:
homogeneity of the metric catalog, the exterior-derivative identity of
the contact form, flatness of the euclidean volume density, total
bundle volume, the two pointwise pullback identities, exactness of the
energy gradient, and a coarse annulus capacity against its closed-form
value.  Everything runs in seconds; tolerances can be overridden (a
zeroed tolerance is the quickest way to see the failure path).
"""

import math

import numpy as np

from .bundle import (ScalarField, SphereBundleGrid, d_omega_chart, integrate,
                     node_tensors)
from .capacity import (CondenserSpec, SolverConfig, energy, energy_gradient,
                       minimize, rasterize_condenser)
from .conformal import (CheckReport, check_pullback_energy_density,
                        check_pullback_volume, similarity_map)
from .exprs import const, exponential, linear, sinusoid
from .metrics import (cartan_tensor, conformal_wrap, euclidean, eval_F,
                      fundamental_tensor, identity_matrix_field, randers,
                      riemannian, tensor_point)
from .shapes import disk, disk_complement

DEFAULT_TOLERANCES = {
    "homogeneity": 1e-10,
    "exterior_derivative": 1e-4,
    "flat_density": 1e-10,
    "total_volume": 1e-3,
    "pullback_volume": 1e-6,
    "pullback_energy_density": 1e-8,
    "energy_gradient": 1e-5,
    "annulus_capacity": 8e-2,
}


def _metric_catalog():
    return (
        euclidean(),
        riemannian(((exponential(1.0, (0.4, 0.0)), const(0.1)),
                    (const(0.1), const(1.2)))),
        randers(identity_matrix_field(), (const(0.4), const(0.1))),
        conformal_wrap(randers(identity_matrix_field(),
                               (const(0.2), const(-0.1))),
                       sinusoid(0.3, (1.0, 0.7))),
    )


def _check_homogeneity(tol):
    rng = np.random.default_rng(23)
    worst = 0.0
    count = 0
    for m in _metric_catalog():
        for _ in range(8):
            x = tuple(rng.uniform(-1.0, 1.0, 2))
            th = rng.uniform(0.0, 2.0 * math.pi)
            r = rng.uniform(0.3, 2.0)
            y = (r * math.cos(th), r * math.sin(th))
            F = eval_F(m, x, y)
            g = fundamental_tensor(m, x, y)
            C = cartan_tensor(m, x, y)
            yv = np.array(y)
            worst = max(worst, abs(yv @ g @ yv - F * F) / (F * F))
            worst = max(worst, float(np.max(np.abs(C @ yv))))
            for lam in (0.5, 2.0, 7.3):
                ys = tuple(lam * v for v in y)
                worst = max(worst, abs(eval_F(m, x, ys) - lam * F) / (lam * F))
                worst = max(worst,
                            float(np.max(np.abs(fundamental_tensor(m, x, ys)
                                                - g))))
            count += 1
    return CheckReport("homogeneity", count, worst, tol, worst <= tol)


def _omega_components(m, z):
    tp = tensor_point(m, (z[0], z[1]), (math.cos(z[2]), math.sin(z[2])))
    return np.array([tp.l_down[0], tp.l_down[1], 0.0])


def _check_exterior_derivative(tol, spacing=1e-2):
    rng = np.random.default_rng(31)
    worst = 0.0
    count = 0
    for m in _metric_catalog()[2:]:
        for _ in range(8):
            z = np.array([rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                          rng.uniform(0.0, 2.0 * math.pi)])
            fd = np.zeros((3, 3))
            for a in range(3):
                zp, zm = z.copy(), z.copy()
                zp[a] += spacing
                zm[a] -= spacing
                row = (_omega_components(m, zp)
                       - _omega_components(m, zm)) / (2.0 * spacing)
                fd[a, :] += row
                fd[:, a] -= row
            tp = tensor_point(m, (z[0], z[1]),
                              (math.cos(z[2]), math.sin(z[2])))
            worst = max(worst, float(np.max(np.abs(fd - d_omega_chart(tp)))))
            count += 1
    return CheckReport("exterior_derivative", count, worst, tol, worst <= tol)


def _check_flat_density(tol):
    grid = SphereBundleGrid(0.0, 1.0, 0.0, 1.0, nx=16, ny=16, ntheta=16)
    rho = node_tensors(euclidean(), grid).rho
    worst = float(np.max(np.abs(rho - 1.0)))
    return CheckReport("flat_density", rho.size, worst, tol, worst <= tol)


def _check_total_volume(tol):
    grid = SphereBundleGrid(0.0, 1.0, 0.0, 1.0, nx=16, ny=16, ntheta=16)
    total = integrate(np.ones(grid.shape), euclidean(), grid)
    err = abs(total - 2.0 * math.pi) / (2.0 * math.pi)
    return CheckReport("total_volume", grid.nx * grid.ny * grid.ntheta, err,
                       tol, err <= tol)


def _check_pullbacks(tols):
    m = _metric_catalog()[3]
    cm = similarity_map(m, scale=1.6, angle=0.4, shift=(0.3, -0.2),
                        domain=(-1.0, -1.0, 1.0, 1.0))
    vol = check_pullback_volume(cm, samples=200, seed=5,
                                tol=tols["pullback_volume"])
    dens = check_pullback_energy_density(cm, linear(0.0, 0.7, -0.4),
                                         samples=200, seed=5,
                                         tol=tols["pullback_energy_density"])
    return vol, dens


def _check_energy_gradient(tol):
    grid = SphereBundleGrid(-1.5, 1.5, -1.5, 1.5, nx=16, ny=16, ntheta=8)
    m = _metric_catalog()[3]
    cond = CondenserSpec(disk_complement(0.0, 0.0, 1.2), disk(0.0, 0.0, 0.5))
    m0, m1 = rasterize_condenser(cond, grid)
    pinned = m0 | m1
    rng = np.random.default_rng(47)
    worst = 0.0
    for _ in range(3):
        vals = np.where(m1, 1.0, rng.uniform(0.0, 1.0, grid.base_shape))
        vals = np.where(m0, 0.0, vals)
        u = ScalarField(values=vals, pinned=pinned)
        v = np.where(pinned, 0.0, rng.standard_normal(grid.base_shape))
        grad = energy_gradient(u, m, grid)
        exact = float(np.sum(grad * v))
        eps = 1e-6
        up = ScalarField(values=vals + eps * v, pinned=pinned)
        um = ScalarField(values=vals - eps * v, pinned=pinned)
        fd = (energy(up, m, grid) - energy(um, m, grid)) / (2.0 * eps)
        worst = max(worst, abs(fd - exact) / max(abs(exact), 1e-30))
    return CheckReport("energy_gradient", 3, worst, tol, worst <= tol)


def _check_annulus(tol):
    grid = SphereBundleGrid(-2.0, 2.0, -2.0, 2.0, nx=64, ny=64, ntheta=8)
    r0 = 0.5
    cond = CondenserSpec(disk_complement(0.0, 0.0, r0 * math.e),
                         disk(0.0, 0.0, r0))
    res = minimize(cond, euclidean(), grid, cfg=SolverConfig(tol=1e-7))
    exact = 4.0 * math.pi ** 2
    err = abs(res.value - exact) / exact
    passed = err <= tol and res.converged
    detail = f"value {res.value:.6f} vs {exact:.6f}"
    return CheckReport("annulus_capacity", 1, err, tol, passed, detail)


def run_selftest(tolerances=None, echo=print):
    """Run every check; returns the list of reports in run order."""
    tols = dict(DEFAULT_TOLERANCES)
    if tolerances:
        unknown = set(tolerances) - set(tols)
        if unknown:
            raise ValueError("unknown selftest tolerance(s): "
                             + ", ".join(sorted(unknown)))
        tols.update(tolerances)
    reports = [
        _check_homogeneity(tols["homogeneity"]),
        _check_exterior_derivative(tols["exterior_derivative"]),
        _check_flat_density(tols["flat_density"]),
        _check_total_volume(tols["total_volume"]),
    ]
    reports.extend(_check_pullbacks(tols))
    reports.append(_check_energy_gradient(tols["energy_gradient"]))
    reports.append(_check_annulus(tols["annulus_capacity"]))
    if echo is not None:
        for rep in reports:
            echo(str(rep))
    return reports
