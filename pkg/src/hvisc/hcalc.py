"""Horizontal differential operators on scalar fields.

Derivatives are taken along the group flows of the frame X1, X2: the
exponential of s(a X1 + b X2) from a point p is the right translate
p . (sa, sb, 0), so the stencils below are exactly left-invariant.  A
field evaluated off closed form is differenced with step ``step``; the
truncation error is O(step^2) for C^3 fields.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import hgroup
from .errors import StepTooSmall

#: Default flow step; balances truncation against cancellation in float64.
DEFAULT_STEP = 1e-3

#: Below this the centered second differences lose too many digits.
MIN_STEP = 1e-8


@dataclass
class Sym2:
    """2x2 symmetric matrix with scalar or array entries."""

    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(m[..., 0, 0], 0.5 * (m[..., 0, 1] + m[..., 1, 0]), m[..., 1, 1])

    def as_matrix(self):
        out = np.empty(np.shape(self.a11) + (2, 2))
        out[..., 0, 0] = self.a11
        out[..., 0, 1] = self.a12
        out[..., 1, 0] = self.a12
        out[..., 1, 1] = self.a22
        return out

    def trace(self):
        return self.a11 + self.a22

    def eig_min(self):
        mean = 0.5 * (self.a11 + self.a22)
        rad = np.sqrt((0.5 * (self.a11 - self.a22)) ** 2 + self.a12 ** 2)
        return mean - rad

    def eig_max(self):
        mean = 0.5 * (self.a11 + self.a22)
        rad = np.sqrt((0.5 * (self.a11 - self.a22)) ** 2 + self.a12 ** 2)
        return mean + rad

    def quad_form(self, v):
        """<S v, v> for v of shape (..., 2)."""
        v = np.asarray(v, dtype=float)
        return (self.a11 * v[..., 0] ** 2 + 2.0 * self.a12 * v[..., 0] * v[..., 1]
                + self.a22 * v[..., 1] ** 2)


@dataclass
class ScalarField:
    """Time-dependent scalar function on the group.

    ``value(points, t)`` must accept an array of shape (..., 3) and a
    scalar time, returning shape (...); it must be re-entrant.  The
    optional analytic derivatives follow the same convention
    (``analytic_hgrad`` returns (..., 2), ``analytic_hhess`` a Sym2 of
    arrays) and, when present, must agree with flow differences to
    O(step^2) at interior points.
    """

    value: Callable
    analytic_hgrad: Optional[Callable] = None
    analytic_hhess: Optional[Callable] = None
    analytic_dt: Optional[Callable] = None
    envelope: Optional[hgroup.GrowthEnvelope] = None

    def __call__(self, p, t):
        return self.value(hgroup.as_points(p), t)

    def without_analytic(self):
        """Copy exposing only the raw evaluator (forces finite differences)."""
        return ScalarField(value=self.value, envelope=self.envelope)


def flow_point(p, e, s):
    """Right-translate p by the horizontal flow exp(s(e1 X1 + e2 X2))."""
    e = np.asarray(e, dtype=float)
    shift = np.stack(np.broadcast_arrays(s * e[..., 0], s * e[..., 1],
                                         np.zeros_like(s * e[..., 0])), axis=-1)
    return hgroup.mul(p, shift)


def _check_step(step):
    if step < MIN_STEP:
        raise StepTooSmall(f"step {step:g} below cancellation floor {MIN_STEP:g}")


def fd_hgrad(u, p, t, step=DEFAULT_STEP):
    """Centered flow differences for (X1 u, X2 u), ignoring analytics."""
    _check_step(step)
    p = hgroup.as_points(p)
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    g1 = (u.value(flow_point(p, e1, step), t)
          - u.value(flow_point(p, e1, -step), t)) / (2.0 * step)
    g2 = (u.value(flow_point(p, e2, step), t)
          - u.value(flow_point(p, e2, -step), t)) / (2.0 * step)
    return np.stack((g1, g2), axis=-1)


def hgrad(u, p, t, step=DEFAULT_STEP):
    """Horizontal gradient, analytic when the field carries one."""
    if u.analytic_hgrad is not None:
        return np.asarray(u.analytic_hgrad(hgroup.as_points(p), t), dtype=float)
    return fd_hgrad(u, p, t, step)


def directional_second(u, p, t, phi, step):
    """Flow second difference along e(phi) = (cos phi, sin phi).

    Approximates <(nabla_H^2 u)* e, e> to O(step^2); at phi in {0, pi/2}
    it is exactly the h-convexity second difference scaled by step^2.
    """
    _check_step(step)
    e = np.array([np.cos(phi), np.sin(phi)])
    up = u.value(flow_point(p, e, step), t)
    um = u.value(flow_point(p, e, -step), t)
    uc = u.value(hgroup.as_points(p), t)
    return (up + um - 2.0 * uc) / (step * step)


def fd_hhess(u, p, t, step=DEFAULT_STEP):
    """Symmetrized horizontal Hessian from three directional differences."""
    p = hgroup.as_points(p)
    a11 = directional_second(u, p, t, 0.0, step)
    a22 = directional_second(u, p, t, np.pi / 2.0, step)
    d45 = directional_second(u, p, t, np.pi / 4.0, step)
    return Sym2(a11, d45 - 0.5 * (a11 + a22), a22)


def hhess(u, p, t, step=DEFAULT_STEP):
    """Symmetrized horizontal Hessian, analytic when available."""
    if u.analytic_hhess is not None:
        return u.analytic_hhess(hgroup.as_points(p), t)
    return fd_hhess(u, p, t, step)


def hlaplacian(u, p, t, step=DEFAULT_STEP):
    """Horizontal Laplacian tr (nabla_H^2 u)*."""
    return hhess(u, p, t, step).trace()


def dt(u, p, t, step=DEFAULT_STEP):
    """Time derivative, analytic when available, else centered in t."""
    if u.analytic_dt is not None:
        return np.asarray(u.analytic_dt(hgroup.as_points(p), t), dtype=float)
    _check_step(step)
    p = hgroup.as_points(p)
    return (u.value(p, t + step) - u.value(p, t - step)) / (2.0 * step)


def richardson_flag(u, p, t, step=DEFAULT_STEP, factor=2.0, rel_tol=0.2):
    """Flag points where halving the step moves the gradient too much.

    A crude non-smoothness detector: compares flow gradients at ``step``
    and ``factor * step``; smooth fields agree to O(step^2).
    """
    g1 = fd_hgrad(u, p, t, step)
    g2 = fd_hgrad(u, p, t, factor * step)
    num = np.linalg.norm(g1 - g2, axis=-1)
    den = np.maximum(np.linalg.norm(g1, axis=-1), 1.0)
    return num > rel_tol * den
