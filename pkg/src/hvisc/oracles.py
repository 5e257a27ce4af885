"""Catalog of explicit solutions with closed-form derivatives, the PDE
residual evaluator, and the exponential barrier checker.

Every catalog field carries analytic value, time derivative, horizontal
gradient, and symmetrized horizontal Hessian.  The closed forms were
cross-checked symbolically and are unit-tested against the flow-stencil
finite differences before any solver consumes them as boundary data.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import hcalc, hgroup, regularity
from .errors import CharacteristicPoint, UnknownName
from .hcalc import ScalarField, Sym2


@dataclass(frozen=True)
class EquationSpec:
    """Instance of u_t - tr(A (nabla_H^2 u)*) + f(p, nabla_H u) = 0.

    ``hamiltonian`` maps (points (..., 3), w (..., 2)) -> (...).
    ``lip_w`` is the declared Lipschitz constant of f in w (assumption
    (A1); for merely locally Lipschitz Hamiltonians declare a bound valid
    on the gradient range actually visited).  ``lip_p`` maps a radius to
    the spatial d_R-Lipschitz constant (A2), and ``growth_c`` is the
    sublinear-growth constant of (A3).
    """

    A: np.ndarray
    hamiltonian: Callable
    lip_w: float = 0.0
    lip_p: Callable = staticmethod(lambda rho: 0.0)
    growth_c: float = 0.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        object.__setattr__(self, "A", A)
        if A.shape != (2, 2) or not np.allclose(A, A.T):
            raise ValueError("A must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(A).min() < -1e-12:
            raise ValueError("A must be positive semidefinite")
        if self.lip_w < 0 or self.growth_c < 0:
            raise ValueError("declared constants must be nonnegative")

    def a_norm(self):
        return float(np.max(np.abs(np.linalg.eigvalsh(self.A))))


def heat_equation():
    """u_t - Delta_H u = 0."""
    return EquationSpec(A=np.eye(2), hamiltonian=lambda p, w: np.zeros(w.shape[:-1]))


def transport_equation(h0=(1.0, 1.0)):
    """u_t - <h0, nabla_H u> = 0."""
    h0 = np.asarray(h0, dtype=float)

    def f(p, w):
        return -(w[..., 0] * h0[0] + w[..., 1] * h0[1])

    n = float(np.hypot(h0[0], h0[1]))
    return EquationSpec(A=np.zeros((2, 2)), hamiltonian=f, lip_w=n, growth_c=n)


def quadratic_hj_equation(grad_bound=2.0):
    """u_t + |nabla_H u|^2 / 2 = 0, with a declared local gradient range."""

    def f(p, w):
        return 0.5 * (w[..., 0] ** 2 + w[..., 1] ** 2)

    return EquationSpec(A=np.zeros((2, 2)), hamiltonian=f,
                        lip_w=float(grad_bound), growth_c=float(grad_bound))


@dataclass(frozen=True)
class BarrierParams:
    """Parameters of the barrier c exp(alpha t + beta <p>) + cf t."""

    alpha: float
    beta: float
    c: float = 1.0
    cf: float = 0.0

    def __post_init__(self):
        if self.beta <= 0 or self.c <= 0:
            raise ValueError("beta and c must be positive")


# -- static fields with Euclidean derivatives --------------------------------

def _hquartic_value(p):
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return x * x * y * y + 2.0 * z * z


def _hquartic_grad(p):
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return np.stack((2.0 * x * y * y, 2.0 * x * x * y, 4.0 * z), axis=-1)


def _hquartic_hess(p):
    x, y, _ = p[..., 0], p[..., 1], p[..., 2]
    H = np.zeros(np.shape(x) + (3, 3))
    H[..., 0, 0] = 2.0 * y * y
    H[..., 0, 1] = H[..., 1, 0] = 4.0 * x * y
    H[..., 1, 1] = 2.0 * x * x
    H[..., 2, 2] = 4.0
    return H


def _gauge_grad(p):
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    s = hgroup.gauge4(p)
    fac = 0.25 * s ** -0.75
    return np.stack((fac * 4.0 * x * (x * x + y * y),
                     fac * 4.0 * y * (x * x + y * y),
                     fac * 32.0 * z), axis=-1)


def _gauge_hess(p):
    x, y, _ = p[..., 0], p[..., 1], p[..., 2]
    s = hgroup.gauge4(p)
    r2 = x * x + y * y
    ds = np.stack((4.0 * x * r2, 4.0 * y * r2, 32.0 * p[..., 2]), axis=-1)
    H = np.zeros(np.shape(x) + (3, 3))
    H[..., 0, 0] = 4.0 * r2 + 8.0 * x * x
    H[..., 0, 1] = H[..., 1, 0] = 8.0 * x * y
    H[..., 1, 1] = 4.0 * r2 + 8.0 * y * y
    H[..., 2, 2] = 32.0
    out = 0.25 * s[..., None, None] ** -0.75 * H
    out -= (3.0 / 16.0) * s[..., None, None] ** -1.75 \
        * ds[..., :, None] * ds[..., None, :]
    return out


_STATIC_FIELDS = {
    "hquartic": (_hquartic_value, _hquartic_grad, _hquartic_hess),
    "gauge": (hgroup.gauge, _gauge_grad, _gauge_hess),
}


def right_translation_solution(u0_name, h0):
    """Solution u(p, t) = u0(p . h0 t) of the linear transport equation.

    Right translation is affine in p with constant Jacobian J, so the
    Euclidean derivatives pull back exactly; horizontal quantities follow
    by frame contraction at the base point.
    """
    if u0_name not in _STATIC_FIELDS:
        raise UnknownName(f"no transport datum named {u0_name!r}")
    f_val, f_grad, f_hess = _STATIC_FIELDS[u0_name]
    h1, h2 = float(h0[0]), float(h0[1])

    def shifted(p, t):
        shift = np.array([h1 * t, h2 * t, 0.0])
        return hgroup.mul(p, shift)

    def value(p, t):
        return f_val(shifted(p, t))

    def jac_t(t):
        # d(p . h0 t)/dp
        return np.array([[1.0, 0.0, 0.0],
                         [0.0, 1.0, 0.0],
                         [0.5 * h2 * t, -0.5 * h1 * t, 1.0]])

    def euclid_grad(p, t):
        g = f_grad(shifted(p, t))
        return np.einsum("ji,...j->...i", jac_t(t), g)

    def analytic_hgrad(p, t):
        return hgroup.horizontal_gradient_from_euclid(euclid_grad(p, t), p)

    def analytic_hhess(p, t):
        J = jac_t(t)
        H = f_hess(shifted(p, t))
        Hp = np.einsum("ki,...kl,lj->...ij", J, H, J)
        return Sym2.from_matrix(hgroup.horizontal_hessian_from_euclid(Hp, p))

    def analytic_dt(p, t):
        x, y = p[..., 0], p[..., 1]
        g = f_grad(shifted(p, t))
        return (g[..., 0] * h1 + g[..., 1] * h2
                + g[..., 2] * 0.5 * (x * h2 - h1 * y))

    return ScalarField(value=value, analytic_hgrad=analytic_hgrad,
                       analytic_hhess=analytic_hhess, analytic_dt=analytic_dt,
                       envelope=hgroup.GrowthEnvelope(k=1.0, c=8.0))


def transport_defect_closed_form(p, h, t):
    """Right-invariant second difference of the transport solution.

    For u0 = x^2 y^2 + 2 z^2 and h0 = (1, 1):
    u(h.p) + u(h^-1.p) - 2 u(p) = 3 (h1 (y+t) + h2 (x+t))^2 + 2 h1^2 h2^2,
    which is nonnegative.  (The equivalent expansion one line earlier in
    the source derivation carries (x+t) in the second slot; re-derived
    symbolically here because the two displayed versions disagree.)
    """
    p = hgroup.as_points(p)
    h = np.asarray(h, dtype=float)
    x, y = p[..., 0], p[..., 1]
    h1, h2 = h[..., 0], h[..., 1]
    return 3.0 * (h1 * (y + t) + h2 * (x + t)) ** 2 + 2.0 * h1 ** 2 * h2 ** 2


def _polynomial_field(coeff):
    """Fields u = c4 (x^2+y^2)^2 + cz z^2 + c2 (x^2+y^2) t + c0 t^2."""
    c4, cz, c2, c0 = coeff

    def value(p, t):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        r = x * x + y * y
        return c4 * r * r + cz * z * z + c2 * r * t + c0 * t * t

    def analytic_dt(p, t):
        x, y, _ = p[..., 0], p[..., 1], p[..., 2]
        return c2 * (x * x + y * y) + 2.0 * c0 * t

    def euclid_grad(p, t):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        r = x * x + y * y
        du_dr = 2.0 * c4 * r + c2 * t
        return np.stack((2.0 * x * du_dr, 2.0 * y * du_dr, 2.0 * cz * z), axis=-1)

    def euclid_hess(p, t):
        x, y, _ = p[..., 0], p[..., 1], p[..., 2]
        r = x * x + y * y
        du_dr = 2.0 * c4 * r + c2 * t
        H = np.zeros(np.shape(x) + (3, 3))
        H[..., 0, 0] = 2.0 * du_dr + 8.0 * c4 * x * x
        H[..., 0, 1] = H[..., 1, 0] = 8.0 * c4 * x * y
        H[..., 1, 1] = 2.0 * du_dr + 8.0 * c4 * y * y
        H[..., 2, 2] = 2.0 * cz
        return H

    def analytic_hgrad(p, t):
        return hgroup.horizontal_gradient_from_euclid(euclid_grad(p, t), p)

    def analytic_hhess(p, t):
        return Sym2.from_matrix(
            hgroup.horizontal_hessian_from_euclid(euclid_hess(p, t), p))

    return ScalarField(value=value, analytic_hgrad=analytic_hgrad,
                       analytic_hhess=analytic_hhess, analytic_dt=analytic_dt,
                       envelope=hgroup.GrowthEnvelope(k=1.0, c=30.0))


def _heat2_field():
    """Heat solution with genuinely mixed x, y, z structure.

    u = (x^2+y^2) z^2 + (x^2+y^2)^3/24 + (4 z^2 + 2 (x^2+y^2)^2) t
        + 17 (x^2+y^2) t^2 + 68 t^3 / 3.
    The coefficient pair (17, 68/3) was confirmed by a symbolic residual
    check before freezing.
    """

    def value(p, t):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        r = x * x + y * y
        return (r * z * z + r ** 3 / 24.0 + (4.0 * z * z + 2.0 * r * r) * t
                + 17.0 * r * t * t + 68.0 * t ** 3 / 3.0)

    def analytic_dt(p, t):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        r = x * x + y * y
        return 4.0 * z * z + 2.0 * r * r + 34.0 * r * t + 68.0 * t * t

    def euclid_grad(p, t):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        r = x * x + y * y
        du_dr = z * z + r * r / 8.0 + 4.0 * r * t + 17.0 * t * t
        return np.stack((2.0 * x * du_dr, 2.0 * y * du_dr,
                         2.0 * r * z + 8.0 * z * t), axis=-1)

    def euclid_hess(p, t):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        r = x * x + y * y
        du_dr = z * z + r * r / 8.0 + 4.0 * r * t + 17.0 * t * t
        d2u_dr2 = r / 4.0 + 4.0 * t
        H = np.zeros(np.shape(x) + (3, 3))
        H[..., 0, 0] = 2.0 * du_dr + 4.0 * x * x * d2u_dr2
        H[..., 0, 1] = H[..., 1, 0] = 4.0 * x * y * d2u_dr2
        H[..., 1, 1] = 2.0 * du_dr + 4.0 * y * y * d2u_dr2
        H[..., 0, 2] = H[..., 2, 0] = 4.0 * x * z
        H[..., 1, 2] = H[..., 2, 1] = 4.0 * y * z
        H[..., 2, 2] = 2.0 * r + 8.0 * t
        return H

    def analytic_hgrad(p, t):
        return hgroup.horizontal_gradient_from_euclid(euclid_grad(p, t), p)

    def analytic_hhess(p, t):
        return Sym2.from_matrix(
            hgroup.horizontal_hessian_from_euclid(euclid_hess(p, t), p))

    return ScalarField(value=value, analytic_hgrad=analytic_hgrad,
                       analytic_hhess=analytic_hhess, analytic_dt=analytic_dt,
                       envelope=hgroup.GrowthEnvelope(k=1.0, c=30.0))


def barrier_field(bp: BarrierParams, sign=1.0):
    """c exp(alpha t + beta <p>) + cf t (sign -1 gives the lower barrier)."""

    def weight(p, t):
        return bp.c * np.exp(bp.alpha * t + bp.beta * hgroup.bracket(p))

    def value(p, t):
        return sign * (weight(p, t) + bp.cf * t)

    def analytic_dt(p, t):
        return sign * (bp.alpha * weight(p, t) + bp.cf)

    def analytic_hgrad(p, t):
        return sign * bp.beta * weight(p, t)[..., None] * hgroup.grad_bracket(p)

    def analytic_hhess(p, t):
        g = weight(p, t)
        gb = hgroup.grad_bracket(p)
        outer = gb[..., :, None] * gb[..., None, :]
        m = sign * g[..., None, None] * (bp.beta ** 2 * outer
                                         + bp.beta * hgroup.hess_bracket(p))
        return Sym2.from_matrix(m)

    return ScalarField(value=value, analytic_hgrad=analytic_hgrad,
                       analytic_hhess=analytic_hhess, analytic_dt=analytic_dt,
                       envelope=hgroup.GrowthEnvelope(k=bp.beta, c=bp.c))


TRANSPORT = "transport"
HEAT1 = "heat1"
HEAT2 = "heat2"
MCF = "mcf"
BARRIER = "barrier"


def catalog(name, h0=(1.0, 1.0), u0="hquartic", params=None):
    """Explicit-solution catalog.

    transport: u0(p . h0 t) for u0 in {"hquartic", "gauge"}; heat1/heat2:
    heat-flow solutions; mcf: the level-set curvature-flow example;
    barrier: the exponential weight (requires ``params``).
    """
    if name == TRANSPORT:
        return right_translation_solution(u0, h0)
    if name == HEAT1:
        return _polynomial_field((1.0, -8.0, 12.0, 24.0))
    if name == HEAT2:
        return _heat2_field()
    if name == MCF:
        return _polynomial_field((1.0, 16.0, 12.0, 12.0))
    if name == BARRIER:
        if params is None:
            raise UnknownName("barrier requires params=BarrierParams(...)")
        return barrier_field(params)
    raise UnknownName(f"no catalog field named {name!r}")


def trace_product(A, h: Sym2):
    """tr(A S) for symmetric A and S."""
    A = np.asarray(A, dtype=float)
    return A[0, 0] * h.a11 + 2.0 * A[0, 1] * h.a12 + A[1, 1] * h.a22


def residual(eq: EquationSpec, u: ScalarField, p, t, step=hcalc.DEFAULT_STEP):
    """u_t - tr(A (nabla_H^2 u)*) + f(p, nabla_H u) at (p, t)."""
    if np.ndim(t) != 0 or t <= 0:
        raise ValueError("t must be a positive scalar")
    p = hgroup.as_points(p)
    ut = hcalc.dt(u, p, t, step)
    H = hcalc.hhess(u, p, t, step)
    g = hcalc.hgrad(u, p, t, step)
    return ut - trace_product(eq.A, H) + eq.hamiltonian(p, g)


#: Horizontal gradients below this norm count as characteristic points.
MCF_GRADIENT_FLOOR = 1e-6


def mcf_residual(u: ScalarField, p, t, step=hcalc.DEFAULT_STEP):
    """Residual of the level-set horizontal mean curvature flow operator.

    u_t - (Delta_H u - <(nabla_H^2 u)* g, g> / |g|^2) with g = nabla_H u;
    undefined on the characteristic set |g| ~ 0 (raises).
    """
    p = hgroup.as_points(p)
    g = hcalc.hgrad(u, p, t, step)
    norm2 = g[..., 0] ** 2 + g[..., 1] ** 2
    if np.any(norm2 < MCF_GRADIENT_FLOOR ** 2):
        raise CharacteristicPoint(
            "horizontal gradient below threshold; curvature operator undefined")
    H = hcalc.hhess(u, p, t, step)
    ut = hcalc.dt(u, p, t, step)
    return ut - (H.trace() - H.quad_form(g) / norm2)


@dataclass
class BarrierReport:
    """Outcome of a sampled barrier verification."""

    min_super_residual: float
    witness_super: tuple
    max_sub_residual: float
    witness_sub: tuple
    threshold: float
    alpha_above_threshold: bool
    n_super_violations: int
    n_sub_violations: int
    bracket_hlaplacian_sup: float

    @property
    def passed(self):
        return self.n_super_violations == 0 and self.n_sub_violations == 0


def barrier_threshold(eq: EquationSpec, beta, mu, cf):
    """Displayed supersolution threshold ||A|| beta^2 mu^2 + C_f beta mu."""
    return eq.a_norm() * beta ** 2 * mu ** 2 + cf * beta * mu


def suggest_alpha(eq: EquationSpec, beta, mu, nu, cf, margin=1e-6):
    """Exponent that dominates the weight's full Hessian trace pointwise.

    With mu >= sup |grad_H <p>| and nu >= sup Delta_H <p>, any
    alpha > ||A|| (beta^2 mu^2 + beta nu) + C_f beta mu makes the upper
    barrier a supersolution everywhere (the displayed threshold keeps only
    the gradient-squared part and can undershoot at moderate radius).
    """
    return eq.a_norm() * (beta ** 2 * mu ** 2 + beta * nu) + cf * beta * mu + margin


def check_barrier(eq: EquationSpec, bp: BarrierParams, mu, s: regularity.SampleSpec,
                  t_points=(0.25, 1.0)):
    """Sample super/subsolution residuals of the exponential barriers.

    The upper barrier is c g + cf t, the lower its negation; residuals are
    evaluated with analytic derivatives at the sampled points and times.
    Violations are reported, never raised.
    """
    pts = regularity.base_points(s)
    upper = barrier_field(bp, sign=1.0)
    lower = barrier_field(bp, sign=-1.0)
    min_super, max_sub = np.inf, -np.inf
    wit_super = wit_sub = (tuple(hgroup.ORIGIN), 0.0)
    n_super = n_sub = 0
    for t in t_points:
        r_up = residual(eq, upper, pts, t)
        r_lo = residual(eq, lower, pts, t)
        i = int(np.argmin(r_up))
        if r_up[i] < min_super:
            min_super, wit_super = float(r_up[i]), (tuple(pts[i]), t)
        j = int(np.argmax(r_lo))
        if r_lo[j] > max_sub:
            max_sub, wit_sub = float(r_lo[j]), (tuple(pts[j]), t)
        n_super += int(np.sum(r_up < 0))
        n_sub += int(np.sum(r_lo > 0))
    nu = float(np.max(hgroup.hess_bracket(pts)[..., [0, 1], [0, 1]].sum(axis=-1)))
    thr = barrier_threshold(eq, bp.beta, mu, bp.cf)
    return BarrierReport(min_super_residual=min_super, witness_super=wit_super,
                         max_sub_residual=max_sub, witness_sub=wit_sub,
                         threshold=thr, alpha_above_threshold=bp.alpha > thr,
                         n_super_violations=n_super, n_sub_violations=n_sub,
                         bracket_hlaplacian_sup=nu)
