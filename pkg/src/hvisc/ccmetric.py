"""Carnot-Caratheodory distance via geodesic root-finding, plus a
brute-force trajectory-optimization oracle.

Geodesics from the origin project to circular arcs in the (x, y) plane;
the vertical coordinate picked up by the horizontal lift equals the
signed area between the arc and its chord.  For a chord of length c and
turning angle phi in (-2 pi, 2 pi) the area is

    z = c^2 (phi - sin phi) / (8 sin^2(phi/2)),

a strictly increasing function of phi, so the angle (equivalently the
signed curvature 2 sin(phi/2)/c of the arc) is found by bisection and
the length is c (phi/2) / sin(phi/2).  Targets on the vertical axis use
the closed value 2 sqrt(pi |z|).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import hgroup
from .errors import NonConvergence, OptimizationFailure

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class GeodesicSolveConfig:
    """Tolerances for the geodesic solve and the brute-force oracle."""

    tol: float = 1e-12
    max_iter: int = 200
    oracle_segments: int = 256

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.oracle_segments < 8:
            raise ValueError("oracle_segments must be >= 8")


DEFAULT_CONFIG = GeodesicSolveConfig()


def _area_ratio(phi):
    """z / c^2 of the arc with turning angle phi; odd and increasing."""
    phi = np.asarray(phi, dtype=float)
    s = np.sin(0.5 * phi)
    small = np.abs(phi) < 1e-6
    safe = np.where(small, 1.0, s)
    return np.where(small, phi / 12.0, (phi - np.sin(phi)) / (8.0 * safe * safe))


def _arc_length_factor(phi):
    """length / chord of the arc: (phi/2) / sin(phi/2)."""
    phi = np.asarray(phi, dtype=float)
    s = np.sin(0.5 * phi)
    small = np.abs(phi) < 1e-9
    return np.where(small, 1.0, (0.5 * phi) / np.where(small, 1.0, s))


def dcc_from_origin(p, cfg=DEFAULT_CONFIG):
    """CC distance from the origin, vectorized over (..., 3).

    The arc length is evaluated through the area constraint as
    (phi/2) sqrt(8 |z| / (phi - sin phi)), which stays well conditioned
    at the cut locus phi -> 2 pi (it tends to the vertical value
    2 sqrt(pi |z|)); the plain chord form degenerates there.  Raises
    NonConvergence when the angle bracket is not exhausted within
    cfg.max_iter bisections and the area mismatch still exceeds cfg.tol.
    """
    pts = hgroup.as_points(p)
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    c = np.hypot(x, y)
    c2 = c * c
    absz = np.abs(z)

    vertical = c2 <= 1e-8 * absz
    flat = absz <= 1e-300 * np.maximum(c2, 1.0)

    csafe = np.where(c2 > 0, c, 1.0)
    target = absz / (csafe * csafe)
    lo = np.zeros(np.shape(target))
    hi = np.full(np.shape(target), _TWO_PI - 1e-15)
    # 4 pi / 2^60 is far below the float spacing of the bracket endpoints,
    # so a fixed sweep exhausts double precision; validate afterwards.
    for _ in range(min(cfg.max_iter, 60)):
        mid = 0.5 * (lo + hi)
        go_up = _area_ratio(mid) < target
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    mid = 0.5 * (lo + hi)
    bad = ~(vertical | flat) & ((hi - lo) > 1e-15 * _TWO_PI) \
        & (np.abs(_area_ratio(mid) - target) * c2 > cfg.tol)
    if np.any(bad):
        raise NonConvergence(
            "geodesic angle bisection stalled before matching the "
            "vertical coordinate; raise max_iter")
    phi = 0.5 * (lo + hi)
    gap = np.maximum(phi - np.sin(phi), 1e-300)
    curved = 0.5 * phi * np.sqrt(8.0 * absz / gap)
    small = phi < 1e-4
    # tiny angles: fall back to the chord form, exact as z -> 0
    curved = np.where(small, c * _arc_length_factor(phi), curved)
    out = np.where(vertical, 2.0 * np.sqrt(np.pi * absz),
                   np.where(flat, c, curved))
    return out if out.shape else float(out)


def dcc(p, q, cfg=DEFAULT_CONFIG):
    """CC distance between two points, by left invariance."""
    return dcc_from_origin(hgroup.mul(hgroup.inverse(p), q), cfg)


def _endpoint(a, b):
    """Endpoint of the horizontal lift of piecewise-constant controls.

    Within a segment the planar path is straight, so x b - y a is
    constant and the vertical increment is exact.
    """
    n = a.size
    dt = 1.0 / n
    x = np.concatenate(([0.0], np.cumsum(a) * dt))
    y = np.concatenate(([0.0], np.cumsum(b) * dt))
    z = 0.5 * np.sum(x[:-1] * b - y[:-1] * a) * dt
    return x[-1], y[-1], z


def _penalized(u, target, weight):
    n = u.size // 2
    a, b = u[:n], u[n:]
    ex, ey, ez = _endpoint(a, b)
    energy = np.sum(a * a + b * b) / n
    gap = (ex - target[0]) ** 2 + (ey - target[1]) ** 2 + (ez - target[2]) ** 2
    return energy + weight * gap


def _coordinate_descent(u, target, weight, sweeps=2, h0=1e-3):
    """Per-segment polish of the penalized objective."""
    n = u.size // 2
    best = _penalized(u, target, weight)
    for _ in range(sweeps):
        for i in range(2 * n):
            h = h0
            for _ in range(8):
                for sgn in (1.0, -1.0):
                    trial = u.copy()
                    trial[i] += sgn * h
                    val = _penalized(trial, target, weight)
                    if val < best:
                        best, u = val, trial
                        break
                else:
                    h *= 0.5
                    continue
                break
    return u


def _minimize_controls(target, n, weight, inits):
    best = None
    for u0 in inits:
        res = minimize(_penalized, u0, args=(target, weight), method="L-BFGS-B",
                       options={"maxiter": 3000, "ftol": 1e-16, "gtol": 1e-14})
        if best is None or res.fun < best.fun:
            best = res
    return best.x


def dcc_oracle(p, segments, seed=0, mismatch_tol=1e-6):
    """Upper bound on d_CC(0, p) from piecewise-constant controls.

    Minimizes the control energy (by Cauchy-Schwarz sqrt(energy) bounds
    the length of any feasible lift from above, with equality at constant
    speed), driving the endpoint onto the target by an escalating penalty
    starting at 1e4, then polishing with coordinate descent.  The run is
    warm-started through a doubling chain of segment counts, so the bound
    weakly decreases as segments double.  Any residual endpoint gap w is
    paid for rigorously with |w_xy| + 2 sqrt(pi |w_z|).

    Raises OptimizationFailure if the endpoint cannot be matched to
    ``mismatch_tol`` in the horizontal coordinates.
    """
    if segments < 8:
        raise ValueError("segments must be >= 8")
    target = tuple(float(v) for v in hgroup.as_points(p))
    rng = np.random.default_rng(seed)

    chain = [segments]
    while chain[-1] > 8 and chain[-1] % 2 == 0:
        chain.append(chain[-1] // 2)
    chain.reverse()

    warm = None
    u = None
    for n in chain:
        inits = []
        if warm is not None:
            half = warm.size // 2
            rep = n // half
            inits.append(np.concatenate([np.repeat(warm[:half], rep),
                                         np.repeat(warm[half:], rep)]))
        inits.append(np.concatenate([np.full(n, target[0]), np.full(n, target[1])]))
        s = (np.arange(n) + 0.5) / n
        for _ in range(4):
            theta = rng.uniform(0.0, _TWO_PI)
            om = rng.choice([-1.5 * np.pi, 1.5 * np.pi, -np.pi, np.pi])
            r0 = rng.uniform(1.0, 3.0)
            inits.append(np.concatenate([r0 * np.cos(theta + om * s),
                                         r0 * np.sin(theta + om * s)]))
        u = _minimize_controls(target, n, 1e4, inits)
        warm = u

    for weight in (1e6, 1e8):
        u = _minimize_controls(target, segments, weight, [u])
    u = _coordinate_descent(u, target, 1e8)

    n = segments
    a, b = u[:n], u[n:]
    ex, ey, ez = _endpoint(a, b)
    # remaining displacement in group terms: w = endpoint^-1 . target
    w = hgroup.mul(hgroup.inverse([ex, ey, ez]), target)
    wx, wy, wz = w
    if np.hypot(wx, wy) > mismatch_tol:
        raise OptimizationFailure(
            f"endpoint mismatch {np.hypot(wx, wy):.2e} above {mismatch_tol:g}")
    correction = np.hypot(wx, wy) + 2.0 * np.sqrt(np.pi * abs(wz))
    return float(np.sqrt(np.sum(a * a + b * b) / n) + correction)
