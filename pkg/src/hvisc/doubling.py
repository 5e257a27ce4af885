"""Numerical laboratory for the doubling-of-variables matrix algebra.

The comparison and convexity arguments penalize with
phi(p, r) = |p . r^-1|^4 / eps and the exponential weight
g(p, t) = exp(alpha t + beta <p>).  The quadratic forms of the
penalization Hessians on twisted horizontal lifts obey exact algebraic
identities; everything here is assembled from analytic entries at
eps = 1 (the eps scaling is exact: the Hessian carries 1/eps, its square
1/eps^2) with dense finite differences kept only as an oracle.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import hgroup, regularity


@dataclass(frozen=True)
class DoublingConfig:
    """Penalization parameters for the variable-doubling sampler."""

    eps: float = 1.0
    beta: float = 1.0
    alpha: float = 1.0
    lam: float = 0.5
    sigma: float = 0.5
    horizon: float = 1.0
    time_points: Tuple[float, float, float] = (0.3, 0.4, 0.5)

    def __post_init__(self):
        if min(self.eps, self.beta, self.sigma, self.horizon) <= 0:
            raise ValueError("eps, beta, sigma, horizon must be positive")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must lie in (0, 1)")


def lift(w, base):
    """Twisted horizontal lift (w1, w2, (w2 x - w1 y)/2) at a base point."""
    w = np.asarray(w, dtype=float)
    x, y = base[..., 0], base[..., 1]
    return np.stack(np.broadcast_arrays(
        w[..., 0], w[..., 1],
        0.5 * (w[..., 1] * x - w[..., 0] * y)), axis=-1)


@dataclass(frozen=True)
class TwistedVector:
    """Horizontal vector w attached to a base point, with its lift."""

    w: tuple
    base: tuple

    @property
    def lifted(self):
        return lift(np.asarray(self.w, dtype=float),
                    hgroup.as_points(self.base))


def _m_twist(p, r):
    """z-part of p . r^-1: z_p - z_r + (y_p x_r - x_p y_r)/2."""
    return (p[..., 2] - r[..., 2]
            + 0.5 * (p[..., 1] * r[..., 0] - p[..., 0] * r[..., 1]))


def phi_hessian(p, r):
    """Full 6x6 Euclidean Hessian of (p, r) -> |p . r^-1|^4 (eps = 1).

    Decomposes as [quartic block on the horizontal slots] +
    32 (grad m (x) grad m + m hess m) where m is the twisted z-part; all
    entries are polynomial.
    """
    p = hgroup.as_points(p)
    r = hgroup.as_points(r)
    dx = p[..., 0] - r[..., 0]
    dy = p[..., 1] - r[..., 1]
    s = dx * dx + dy * dy
    m = _m_twist(p, r)

    shape = np.shape(m)
    H = np.zeros(shape + (6, 6))

    # quartic part (dx^2 + dy^2)^2 over (xp, yp, xr, yr)
    B = np.zeros(shape + (2, 2))
    B[..., 0, 0] = 4.0 * s + 8.0 * dx * dx
    B[..., 0, 1] = B[..., 1, 0] = 8.0 * dx * dy
    B[..., 1, 1] = 4.0 * s + 8.0 * dy * dy
    for (i, j, sign) in ((0, 0, 1.0), (0, 3, -1.0), (3, 0, -1.0), (3, 3, 1.0)):
        H[..., i:i + 2, j:j + 2] += sign * B

    # 16 m^2 part: gradient of m in (xp, yp, zp, xr, yr, zr)
    gm = np.zeros(shape + (6,))
    gm[..., 0] = -0.5 * r[..., 1]
    gm[..., 1] = 0.5 * r[..., 0]
    gm[..., 2] = 1.0
    gm[..., 3] = 0.5 * p[..., 1]
    gm[..., 4] = -0.5 * p[..., 0]
    gm[..., 5] = -1.0
    H += 32.0 * gm[..., :, None] * gm[..., None, :]
    hm = np.zeros(shape + (6, 6))
    hm[..., 0, 4] = hm[..., 4, 0] = -0.5
    hm[..., 1, 3] = hm[..., 3, 1] = 0.5
    H += 32.0 * m[..., None, None] * hm
    return H


def phi_hessian_fd(p, r, step=1e-5):
    """Dense finite-difference oracle for phi_hessian (single point)."""
    p = np.asarray(p, dtype=float).reshape(3)
    r = np.asarray(r, dtype=float).reshape(3)
    v0 = np.concatenate([p, r])

    def phi(v):
        return hgroup.gauge4(hgroup.mul(v[:3], hgroup.inverse(v[3:])))

    H = np.zeros((6, 6))
    eye = np.eye(6)
    for i in range(6):
        for j in range(i, 6):
            vpp = phi(v0 + step * (eye[i] + eye[j]))
            vpm = phi(v0 + step * (eye[i] - eye[j]))
            vmp = phi(v0 - step * (eye[i] - eye[j]))
            vmm = phi(v0 - step * (eye[i] + eye[j]))
            H[i, j] = H[j, i] = (vpp - vpm - vmp + vmm) / (4.0 * step * step)
    return H


def _lifts(p, q, r, w):
    p = hgroup.as_points(p)
    q = hgroup.as_points(q)
    r = hgroup.as_points(r)
    w = np.asarray(w, dtype=float)
    return lift(w, p), lift(w, q), lift(w, r)


def identity_vanishing(p, q, r, w):
    """Quadratic form of the (p, r) penalization Hessian on the lift.

    Returns (value, scale): the form vanishes identically (the q slot is
    padded with zeros), and ``scale`` is the absolute-value form
    sum |W_i||H_ij||W_j| against which the cancellation is judged.
    """
    wp, _, wr = _lifts(p, q, r, w)
    H = phi_hessian(p, r)
    W = np.concatenate([wp, wr], axis=-1)
    value = np.einsum("...i,...ij,...j->...", W, H, W)
    scale = np.einsum("...i,...ij,...j->...", np.abs(W), np.abs(H), np.abs(W))
    return value, np.maximum(scale, 1.0)


def vanishing_form_pair(p, q, w):
    """Two-variable version (comparison argument): form of nabla^2 |p.q^-1|^4."""
    value, scale = identity_vanishing(p, q, q, w)
    return value, scale


def identity_squared(p, q, r, w):
    """lhs = <M1'^2 W, W> at eps = 1 and rhs = 512 m1^2 |w|^2.

    m1 is the twisted z-part of p . r^-1.  The ratio is exactly 1; with
    the 1/eps normalization restored the square scales as 1/eps^2.
    """
    wp, _, wr = _lifts(p, q, r, w)
    H = phi_hessian(p, r)
    W = np.concatenate([wp, wr], axis=-1)
    HW = np.einsum("...ij,...j->...i", H, W)
    lhs = np.einsum("...i,...i->...", HW, HW)
    w = np.asarray(w, dtype=float)
    m1 = _m_twist(hgroup.as_points(p), hgroup.as_points(r))
    rhs = 512.0 * m1 ** 2 * (w[..., 0] ** 2 + w[..., 1] ** 2)
    return lhs, rhs


def cross_identity(p, q, r, w):
    """lhs = <M1' M1'' W, W> at eps = 1 and rhs = 256 m1 m2 |w|^2.

    M1'' is the Hessian of |q . r^-1|^4; both factors live inside the
    9x9 three-point matrix, padded with zeros off their own slots.
    """
    wp, wq, wr = _lifts(p, q, r, w)
    Hp = phi_hessian(p, r)
    Hq = phi_hessian(q, r)
    # embed into 9x9 ordering (p, q, r) and contract
    Wp = np.concatenate([wp, wr], axis=-1)
    Wq = np.concatenate([wq, wr], axis=-1)
    HpW = np.einsum("...ij,...j->...i", Hp, Wp)
    HqW = np.einsum("...ij,...j->...i", Hq, Wq)
    # only the shared r slot overlaps between the two images
    lhs = np.einsum("...i,...i->...", HpW[..., 3:], HqW[..., 3:])
    w = np.asarray(w, dtype=float)
    m1 = _m_twist(hgroup.as_points(p), hgroup.as_points(r))
    m2 = _m_twist(hgroup.as_points(q), hgroup.as_points(r))
    rhs = 256.0 * m1 * m2 * (w[..., 0] ** 2 + w[..., 1] ** 2)
    return lhs, rhs


def weight_euclid_hess(p, t, cfg: DoublingConfig):
    """Euclidean 3x3 Hessian of g = exp(alpha t + beta <p>).

    nabla^2 g = g (beta^2 grad<p> (x) grad<p> + beta nabla^2 <p>).
    """
    p = hgroup.as_points(p)
    g = np.exp(cfg.alpha * t + cfg.beta * hgroup.bracket(p))
    eg = hgroup.bracket_euclid_grad(p)
    outer = eg[..., :, None] * eg[..., None, :]
    return g[..., None, None] * (cfg.beta ** 2 * outer
                                 + cfg.beta * hgroup.bracket_euclid_hess(p))


def weight_value(p, t, cfg: DoublingConfig):
    return np.exp(cfg.alpha * t + cfg.beta * hgroup.bracket(p))


@dataclass
class PenalizationSweep:
    """Empirical constants from one ball radius.

    ``c_m2``: sup <M2 W, W> / (|w|^2 K); ``c_m1m2``: the same for
    <M1 M2 W, W> after factoring out |z-part|; ``c_m2sq``:
    sup <M2^2 W, W> / (|w|^2 K^2); the ``_three`` variants use the
    three-point block matrix and weight sum.
    """

    radius: float
    c_m2: float
    c_m1m2: float
    c_m2sq: float
    c_m2_three: float
    c_m2sq_three: float


@dataclass
class PenalizationReport:
    """Sweeps at the base radius and its double, plus the z-dependence.

    ``m1m2_z_dependence`` records (|z-part|, normalized mixed form)
    samples rather than asserting the factored shape.  ``diverging``
    flags constants that kept growing when the ball doubled.
    """

    inner: PenalizationSweep
    outer: PenalizationSweep
    m1m2_z_dependence: np.ndarray
    diverging: bool

    @property
    def c_m2(self):
        return max(self.inner.c_m2, self.outer.c_m2)

    @property
    def c_m1m2(self):
        return max(self.inner.c_m1m2, self.outer.c_m1m2)

    @property
    def c_m2sq(self):
        return max(self.inner.c_m2sq, self.outer.c_m2sq)


def _pair_forms(cfg, pts_p, pts_q, w, t, s):
    Wp = lift(w, pts_p)
    Wq = lift(w, pts_q)
    W = np.concatenate([Wp, Wq], axis=-1)
    shape = np.shape(pts_p[..., 0])
    M2 = np.zeros(shape + (6, 6))
    M2[..., :3, :3] = weight_euclid_hess(pts_p, t, cfg)
    M2[..., 3:, 3:] = weight_euclid_hess(pts_q, s, cfg)
    K = weight_value(pts_p, t, cfg) + weight_value(pts_q, s, cfg)
    M1 = phi_hessian(pts_p, pts_q)
    M2W = np.einsum("...ij,...j->...i", M2, W)
    f_m2 = np.einsum("...i,...i->...", W, M2W)
    f_m2sq = np.einsum("...i,...i->...", M2W, M2W)
    M1M2 = np.einsum("...i,...i->...", np.einsum("...ij,...j->...i", M1, W), M2W)
    w2 = w[..., 0] ** 2 + w[..., 1] ** 2
    zpart = np.abs(_m_twist(pts_p, pts_q))
    return f_m2 / (w2 * K), f_m2sq / (w2 * K * K), M1M2 / (w2 * K), zpart


def penalization_bounds(cfg: DoublingConfig, samples, seed=0,
                        radius=5.0) -> PenalizationReport:
    """Sample the weight-Hessian forms and report empirical constants.

    Samples (p, q, r) in a gauge ball, unit horizontal w, and the
    configured time points.  Ratios are normalized by |w|^2 K (and K^2
    for the squared form); the |z-part| dependence of the mixed form is
    recorded rather than asserted.  A doubling of the ball radius probes
    for divergence (boundedness rests on the boundedness of the weight's
    bracket derivatives).
    """
    t, s_time, tau = cfg.time_points
    rng = np.random.default_rng(seed)
    zdep_store = []

    def sweep(rad):
        sp = regularity.SampleSpec(seed=seed, count=samples, radius=rad,
                                   h_radius=1.0)
        p = regularity.base_points(sp, rng)
        q = regularity.base_points(sp, rng)
        theta = rng.uniform(0, 2 * np.pi, samples)
        w = np.stack((np.cos(theta), np.sin(theta)), axis=-1)
        r2, r2sq, r12, zpart = _pair_forms(cfg, p, q, w, t, s_time)
        zdep_store.append(np.stack([zpart, r12], axis=-1))
        # three-point analogue: K gains g(r, tau), M2 a third block
        r3 = regularity.base_points(sp, rng)
        W9 = np.concatenate([lift(w, p), lift(w, q), lift(w, r3)], axis=-1)
        M2_9 = np.zeros((samples, 9, 9))
        M2_9[..., :3, :3] = weight_euclid_hess(p, t, cfg)
        M2_9[..., 3:6, 3:6] = weight_euclid_hess(q, s_time, cfg)
        M2_9[..., 6:, 6:] = weight_euclid_hess(r3, tau, cfg)
        K9 = (weight_value(p, t, cfg) + weight_value(q, s_time, cfg)
              + weight_value(r3, tau, cfg))
        M2W9 = np.einsum("...ij,...j->...i", M2_9, W9)
        f3 = np.einsum("...i,...i->...", W9, M2W9) / K9
        f3sq = np.einsum("...i,...i->...", M2W9, M2W9) / (K9 * K9)
        return PenalizationSweep(
            radius=rad, c_m2=float(np.max(r2)),
            c_m1m2=float(np.max(np.abs(r12) / np.maximum(zpart, 1e-6))),
            c_m2sq=float(np.max(r2sq)), c_m2_three=float(np.max(f3)),
            c_m2sq_three=float(np.max(f3sq)))

    inner = sweep(radius)
    outer = sweep(2.0 * radius)
    diverging = (outer.c_m2 > 2.0 * inner.c_m2 + 1e-9
                 or outer.c_m2sq > 2.0 * inner.c_m2sq + 1e-9)
    return PenalizationReport(inner=inner, outer=outer,
                              m1m2_z_dependence=zdep_store[0],
                              diverging=bool(diverging))
