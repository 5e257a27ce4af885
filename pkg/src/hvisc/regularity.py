"""Sampling estimators for Lipschitz moduli, convexity notions, and symmetry.

These are falsifiers and lower-bound estimators, not proofs: every
quantity is a signed extremum over a deterministic (seeded) sample,
reported together with its witness so that counterexamples can be
reproduced exactly.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hcalc, hgroup

LEFT = "left"
RIGHT = "right"
LEFT_TRANSLATE = "left_translate"
RIGHT_INVARIANT = "right_invariant"
ORIGIN_MODE = "origin"
VERTICAL_MODE = "vertical"

#: Pairs closer than this are skipped as degenerate in modulus ratios.
DEGENERATE_DISTANCE = 1e-12


@dataclass(frozen=True)
class SampleSpec:
    """Deterministic sampling plan.

    ``radius`` is the gauge-ball radius for base points; ``h_radius``
    caps displacement magnitudes, drawn log-uniformly over
    [1e-3, h_radius] (violations in the catalog examples sit at O(1)
    displacements, preservation failures need small ones too).
    """

    seed: int = 0
    count: int = 2000
    radius: float = 2.0
    h_radius: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.radius <= 0 or self.h_radius <= 0:
            raise ValueError("radii must be positive")


@dataclass
class Estimate:
    """Extremal value with the witness that realized it."""

    value: float
    witness: tuple

    def __float__(self):
        return float(self.value)


def _rng(s: SampleSpec):
    return np.random.default_rng(s.seed)


def base_points(s: SampleSpec, rng=None, count=None):
    """Points spread over the gauge ball of radius s.radius."""
    rng = _rng(s) if rng is None else rng
    n = s.count if count is None else count
    raw = rng.normal(size=(n, 3))
    g = hgroup.gauge(raw)
    scale = s.radius * rng.uniform(0.0, 1.0, n) ** 0.25 / np.maximum(g, 1e-300)
    return hgroup.dilate(raw, scale)


def horizontal_displacements(s: SampleSpec, rng=None, count=None):
    """Horizontal elements with log-uniform magnitude, shape (n, 3)."""
    rng = _rng(s) if rng is None else rng
    n = s.count if count is None else count
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    mag = np.exp(rng.uniform(np.log(1e-3), np.log(s.h_radius), n))
    return np.stack((mag * np.cos(theta), mag * np.sin(theta),
                     np.zeros(n)), axis=-1)


def _group_displacements(s: SampleSpec, rng, count):
    """Full (non-horizontal) displacements with log-uniform gauge."""
    raw = rng.normal(size=(count, 3))
    g = np.maximum(hgroup.gauge(raw), 1e-300)
    mag = np.exp(rng.uniform(np.log(1e-3), np.log(s.h_radius), count))
    return hgroup.dilate(raw, mag / g)


def _modulus_pairs(s: SampleSpec):
    """Mixed pair families: global, left-local, right-local, mirrored.

    Mirroring every pair through the group inverse makes the sample set
    symmetric, so for even fields the LEFT and RIGHT moduli agree over
    the same set (d_R(p, q) = d_L(p^-1, q^-1)).
    """
    rng = _rng(s)
    n = max(s.count // 3, 1)
    p_glob = base_points(s, rng, n)
    q_glob = base_points(s, rng, n)
    p_loc = base_points(s, rng, 2 * n)
    w = _group_displacements(s, rng, 2 * n)
    q_left = hgroup.mul(p_loc[:n], w[:n])        # d_L(p, p.w) = |w|_G
    q_right = hgroup.mul(w[n:], p_loc[n:])       # d_R(w.p, p) = |w|_G
    p = np.concatenate([p_glob, p_loc[:n], p_loc[n:]])
    q = np.concatenate([q_glob, q_left, q_right])
    p = np.concatenate([p, hgroup.inverse(p)])
    q = np.concatenate([q, hgroup.inverse(q)])
    return p, q


def lip_modulus(u, t, metric, s: SampleSpec, extra_pairs=None):
    """Largest sampled difference quotient w.r.t. d_L or d_R.

    A lower bound on the true modulus, nondecreasing in the sample count;
    degenerate pairs (distance below 1e-12) are skipped.  ``extra_pairs``
    is an optional (pairs, 2, 3) array of caller-supplied witnesses.
    """
    if metric not in (LEFT, RIGHT):
        raise ValueError(f"metric must be {LEFT!r} or {RIGHT!r}")
    p, q = _modulus_pairs(s)
    if extra_pairs is not None:
        extra = np.asarray(extra_pairs, dtype=float).reshape(-1, 2, 3)
        p = np.concatenate([p, extra[:, 0]])
        q = np.concatenate([q, extra[:, 1]])
    d = hgroup.dist_left(p, q) if metric == LEFT else hgroup.dist_right(p, q)
    keep = d > DEGENERATE_DISTANCE
    p, q, d = p[keep], q[keep], d[keep]
    ratios = np.abs(u.value(p, t) - u.value(q, t)) / d
    i = int(np.argmax(ratios))
    return Estimate(float(ratios[i]), (tuple(p[i]), tuple(q[i])))


def hconvexity_defect(u, t, side, s: SampleSpec, displacements=None):
    """Smallest sampled second difference along horizontal displacements.

    side LEFT_TRANSLATE probes u(p.h) + u(p.h^-1) - 2u(p) (classical
    h-convexity); RIGHT_INVARIANT probes u(h.p) + u(h^-1.p) - 2u(p).
    Nonnegative values mean no violation was found.
    """
    if side not in (LEFT_TRANSLATE, RIGHT_INVARIANT):
        raise ValueError(f"side must be {LEFT_TRANSLATE!r} or {RIGHT_INVARIANT!r}")
    rng = _rng(s)
    p = base_points(s, rng)
    h = (horizontal_displacements(s, rng) if displacements is None
         else np.asarray(displacements, dtype=float))
    if displacements is not None:
        reps = -(-p.shape[0] // h.shape[0])
        h = np.tile(h, (reps, 1))[: p.shape[0]]
    if side == LEFT_TRANSLATE:
        plus, minus = hgroup.mul(p, h), hgroup.mul(p, hgroup.inverse(h))
    else:
        plus, minus = hgroup.mul(h, p), hgroup.mul(hgroup.inverse(h), p)
    second = u.value(plus, t) + u.value(minus, t) - 2.0 * u.value(p, t)
    i = int(np.argmin(second))
    return Estimate(float(second[i]), (tuple(p[i]), tuple(h[i])))


def vconvexity_min_eig(u, t, s: SampleSpec, step=hcalc.DEFAULT_STEP,
                       extra_points=None):
    """Smallest sampled eigenvalue of the symmetrized horizontal Hessian."""
    p = base_points(s)
    if extra_points is not None:
        p = np.concatenate([p, np.asarray(extra_points, dtype=float).reshape(-1, 3)])
    eig = hcalc.hhess(u, p, t, step).eig_min()
    i = int(np.argmin(eig))
    return Estimate(float(eig[i]), (tuple(p[i]),))


def evenness_defect(u, t, mode, s: SampleSpec):
    """Largest sampled asymmetry under inversion or vertical reflection."""
    if mode not in (ORIGIN_MODE, VERTICAL_MODE):
        raise ValueError(f"mode must be {ORIGIN_MODE!r} or {VERTICAL_MODE!r}")
    p = base_points(s)
    mirrored = hgroup.inverse(p) if mode == ORIGIN_MODE else hgroup.reflect_vertical(p)
    gap = np.abs(u.value(p, t) - u.value(mirrored, t))
    i = int(np.argmax(gap))
    return Estimate(float(gap[i]), (tuple(p[i]),))


def separability_defect(u, t, s: SampleSpec):
    """Largest sampled gap in the two-sided translation identity.

    |u(p.h) + u(p.h^-1) - u(h.p) - u(h^-1.p)| vanishes exactly for
    fields of the separate form f(x, y) + g(z).
    """
    rng = _rng(s)
    p = base_points(s, rng)
    h = horizontal_displacements(s, rng)
    hi = hgroup.inverse(h)
    gap = np.abs(u.value(hgroup.mul(p, h), t) + u.value(hgroup.mul(p, hi), t)
                 - u.value(hgroup.mul(h, p), t) - u.value(hgroup.mul(hi, p), t))
    i = int(np.argmax(gap))
    return Estimate(float(gap[i]), (tuple(p[i]), tuple(h[i])))
