"""Monotone explicit finite-difference solver on a truncated box.

Discretization of u_t - tr(A (nabla_H^2 u)*) + f(p, nabla_H u) = 0:

* second order: tr(A (nabla_H^2 u)*) = sum_i lam_i <(nabla_H^2 u)* e_i, e_i>
  over the eigenpairs of A, each quadratic form realized as a group-flow
  second difference u(p . (h e_i)) + u(p . (-h e_i)) - 2 u(p) over h^2.
  The flow step is widened to h = m delta with m ~ sqrt(scale/delta):
  with the vertical spacing tied to delta, a single-cell flow step would
  freeze the relative interpolation error (delta_z / h)^2 of the shear
  and stall convergence, while h ~ sqrt(delta) balances the O(h^2)
  truncation against it, giving a clean first-order scheme.
* first order: Lax-Friedrichs, f at centered flow differences of step
  delta minus (sigma/2) sum_i (D+_i - D-_i) u with one-sided flow
  differences; monotone when sigma >= the componentwise Lipschitz bound
  of f in the gradient slot.

Off-grid stencil points (the flows shear z by +-(step) y/2, (step) x/2,
and the widened step is not a lattice vector) are filled by trilinear
interpolation; its weights lie in [0, 1] and sum to 1, so it preserves
monotonicity.  Updates are Jacobi (from an immutable previous state) and
contain no randomness, so trajectories are bitwise reproducible.
"""

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from . import hgroup
from .errors import CflViolation, NanDetected, OutOfDomain
from .hcalc import ScalarField
from .oracles import EquationSpec


@dataclass(frozen=True)
class Box:
    xlim: Tuple[float, float]
    ylim: Tuple[float, float]
    zlim: Tuple[float, float]

    def lengths(self):
        return (self.xlim[1] - self.xlim[0], self.ylim[1] - self.ylim[0],
                self.zlim[1] - self.zlim[0])

    def max_xy(self):
        return max(abs(self.xlim[0]), abs(self.xlim[1]),
                   abs(self.ylim[0]), abs(self.ylim[1]))

    def center(self):
        return np.array([0.5 * (self.xlim[0] + self.xlim[1]),
                         0.5 * (self.ylim[0] + self.ylim[1]),
                         0.5 * (self.zlim[0] + self.zlim[1])])


@dataclass(frozen=True)
class SchemeConfig:
    """Explicit-scheme parameters.

    ``lf_dissipation`` must be at least the declared gradient-Lipschitz
    constant of the Hamiltonian.  ``stencil_scale`` sets the widened
    diffusion flow step h = m delta with m = round(sqrt(scale/delta)).
    The monotonicity bound is dt (2 (lam1+lam2)/h^2 + 2 sigma/delta) <= 1;
    with m = 1 this is the classical single-cell condition.
    """

    dt: Optional[float] = None
    lf_dissipation: float = 0.0
    t_end: float = 0.1
    interp: str = "trilinear"
    cfl_number: float = 0.9
    stencil_scale: float = 0.45

    def __post_init__(self):
        if self.interp != "trilinear":
            raise ValueError("only trilinear interpolation is implemented")
        if self.lf_dissipation < 0:
            raise ValueError("lf_dissipation must be nonnegative")
        if not 0 < self.cfl_number <= 1:
            raise ValueError("cfl_number must lie in (0, 1]")


@dataclass
class GridFunction:
    """Node values on a uniform box with halo, plus a boundary source.

    ``values`` has shape (nx + 2 halo, ny + 2 halo, nz + 2 halo); node
    ``halo`` sits on the lower box face.  ``boundary_source(points, t)``
    refreshes the halo and the box faces each step (Dirichlet); when
    absent the initial values are frozen there and measurements should
    stay in the inner half-box.
    """

    box: Box
    nx: int
    ny: int
    nz: int
    halo: int
    values: np.ndarray
    boundary_source: Optional[Callable] = None

    def __post_init__(self):
        if self.halo < 2:
            raise ValueError("halo must be >= 2")
        expected = (self.nx + 2 * self.halo, self.ny + 2 * self.halo,
                    self.nz + 2 * self.halo)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")

    @property
    def dx(self):
        return (self.box.xlim[1] - self.box.xlim[0]) / (self.nx - 1)

    @property
    def dy(self):
        return (self.box.ylim[1] - self.box.ylim[0]) / (self.ny - 1)

    @property
    def dz(self):
        return (self.box.zlim[1] - self.box.zlim[0]) / (self.nz - 1)

    def axis_coords(self):
        h = self.halo
        xs = self.box.xlim[0] + (np.arange(self.nx + 2 * h) - h) * self.dx
        ys = self.box.ylim[0] + (np.arange(self.ny + 2 * h) - h) * self.dy
        zs = self.box.zlim[0] + (np.arange(self.nz + 2 * h) - h) * self.dz
        return xs, ys, zs

    def points(self, region="all"):
        """Node coordinates as an array (..., 3) for a named region."""
        xs, ys, zs = self.axis_coords()
        sl = self._region_slices(region)
        X, Y, Z = np.meshgrid(xs[sl[0]], ys[sl[1]], zs[sl[2]], indexing="ij")
        return np.stack((X, Y, Z), axis=-1)

    def _region_slices(self, region):
        h = self.halo
        if region == "all":
            return (slice(None),) * 3
        if region == "box":
            return (slice(h, h + self.nx), slice(h, h + self.ny),
                    slice(h, h + self.nz))
        if region == "interior":
            return (slice(h + 1, h + self.nx - 1), slice(h + 1, h + self.ny - 1),
                    slice(h + 1, h + self.nz - 1))
        raise ValueError(f"unknown region {region!r}")

    def region_values(self, region):
        return self.values[self._region_slices(region)]

    def fill_boundary(self, t):
        """Dirichlet refresh of everything outside the strict interior."""
        if self.boundary_source is None:
            return
        sl = self._region_slices("interior")
        mask = np.ones(self.values.shape, dtype=bool)
        mask[sl] = False
        pts = self.points("all")[mask]
        self.values[mask] = self.boundary_source(pts, t)

    def interpolate(self, pts):
        """Trilinear evaluation at arbitrary points (clipped to the grid)."""
        pts = hgroup.as_points(pts)
        xs, ys, zs = self.axis_coords()
        out_shape = pts.shape[:-1]
        fx = (pts[..., 0].ravel() - xs[0]) / self.dx
        fy = (pts[..., 1].ravel() - ys[0]) / self.dy
        fz = (pts[..., 2].ravel() - zs[0]) / self.dz
        acc = np.zeros(fx.shape)
        V = self.values
        ix = np.clip(np.floor(fx).astype(int), 0, V.shape[0] - 2)
        iy = np.clip(np.floor(fy).astype(int), 0, V.shape[1] - 2)
        iz = np.clip(np.floor(fz).astype(int), 0, V.shape[2] - 2)
        wx = np.clip(fx - ix, 0.0, 1.0)
        wy = np.clip(fy - iy, 0.0, 1.0)
        wz = np.clip(fz - iz, 0.0, 1.0)
        for cx in (0, 1):
            ax = wx if cx else 1.0 - wx
            for cy in (0, 1):
                ay = wy if cy else 1.0 - wy
                for cz in (0, 1):
                    az = wz if cz else 1.0 - wz
                    acc += ax * ay * az * V[ix + cx, iy + cy, iz + cz]
        return acc.reshape(out_shape)

    def as_field(self):
        """Wrap the snapshot as a time-independent ScalarField."""
        return ScalarField(value=lambda p, t: self.interpolate(p))

    def copy(self):
        return dataclasses.replace(self, values=self.values.copy())


def stencil_multiplier(delta, scale):
    return max(1, int(round(np.sqrt(scale / delta))))


def required_halo(box: Box, delta, dz, eq: EquationSpec, cfg: SchemeConfig):
    """Halo wide enough for the widened diffusion stencil and its shear."""
    m = stencil_multiplier(delta, cfg.stencil_scale)
    if np.allclose(eq.A, 0.0):
        m = 1
    h = m * delta
    reach_xy = int(np.ceil(h / delta)) + 1
    span = max(abs(box.xlim[0]), abs(box.xlim[1])) + h \
        + max(abs(box.ylim[0]), abs(box.ylim[1])) + h
    reach_z = int(np.ceil(0.5 * h * span / dz)) + 1
    return max(2, reach_xy, reach_z)


def make_grid(box: Box, delta, u0=None, boundary_source=None, halo=None,
              z_spacing=None, eq=None, cfg=None):
    """Build a grid with spacing ~delta in x, y.

    The vertical spacing defaults to delta * max(|x|, |y|) / 2 rounded to
    divide the box, so the single-cell flow shears stay within one cell.
    When ``eq``/``cfg`` are supplied the halo is sized for their stencils.
    """
    Lx, Ly, Lz = Box.lengths(box)
    nx = int(round(Lx / delta)) + 1
    ny = int(round(Ly / delta)) + 1
    dz_target = z_spacing if z_spacing is not None else delta * box.max_xy() / 2.0
    nz = max(2, int(round(Lz / dz_target))) + 1
    dz = Lz / (nz - 1)
    if halo is None:
        if eq is not None and cfg is not None:
            halo = required_halo(box, delta, dz, eq, cfg)
        else:
            halo = 2
    shape = (nx + 2 * halo, ny + 2 * halo, nz + 2 * halo)
    g = GridFunction(box=box, nx=nx, ny=ny, nz=nz, halo=halo,
                     values=np.zeros(shape), boundary_source=boundary_source)
    if u0 is not None:
        value = u0.value if isinstance(u0, ScalarField) else u0
        g.values[...] = value(g.points("all"), 0.0)
    return g


class _GatherPoint:
    """Precomputed trilinear gather for one group-flow stencil offset.

    The offset (a, b) is constant over the grid, so the x/y corner
    weights are scalars; the vertical shear (x b - y a)/2 varies with the
    base column only, giving per-column z index offsets and weights.
    """

    def __init__(self, grid: GridFunction, a, b):
        h = grid.halo
        ni, nj = grid.nx - 2, grid.ny - 2
        self.ni, self.nj, self.nk = ni, nj, grid.nz - 2
        fa = a / grid.dx
        fb = b / grid.dy
        self.ca = int(np.floor(fa))
        self.cb = int(np.floor(fb))
        self.wx = fa - self.ca
        self.wy = fb - self.cb
        xs, ys, _ = grid.axis_coords()
        xi = xs[h + 1: h + 1 + ni]
        yj = ys[h + 1: h + 1 + nj]
        zeta = 0.5 * (xi[:, None] * b - yj[None, :] * a)
        fz = zeta / grid.dz
        self.kz = np.floor(fz).astype(np.int32)
        self.wz = (fz - self.kz)[:, :, None]
        self.x0 = h + 1 + self.ca
        self.y0 = h + 1 + self.cb
        zbase = h + 1 + np.arange(self.nk, dtype=np.int32)
        self.zidx = zbase[None, None, :] + self.kz[:, :, None]
        nzt = grid.values.shape[2]
        if (self.x0 < 0 or self.x0 + ni + 1 > grid.values.shape[0]
                or self.y0 < 0 or self.y0 + nj + 1 > grid.values.shape[1]
                or self.zidx.min() < 0 or self.zidx.max() + 1 > nzt - 1):
            raise OutOfDomain(
                f"stencil offset ({a:.4g}, {b:.4g}) leaves the halo; "
                "enlarge halo or shrink the stencil")

    def __call__(self, V):
        acc = None
        for cx, ax in ((0, 1.0 - self.wx), (1, self.wx)):
            if ax == 0.0:
                continue
            for cy, ay in ((0, 1.0 - self.wy), (1, self.wy)):
                if ay == 0.0:
                    continue
                sub = V[self.x0 + cx: self.x0 + cx + self.ni,
                        self.y0 + cy: self.y0 + cy + self.nj, :]
                lo = np.take_along_axis(sub, self.zidx, axis=2)
                hi = np.take_along_axis(sub, self.zidx + 1, axis=2)
                term = (1.0 - self.wz) * lo + self.wz * hi
                acc = ax * ay * term if acc is None else acc + ax * ay * term
        return acc


class StencilPlan:
    """All gathers and stability data for one (grid, equation, scheme)."""

    def __init__(self, grid: GridFunction, eq: EquationSpec, cfg: SchemeConfig):
        self.grid = grid
        self.eq = eq
        self.cfg = cfg
        delta = grid.dx
        lam, vecs = np.linalg.eigh(eq.A)
        self.m = stencil_multiplier(delta, cfg.stencil_scale)
        self.hstep = self.m * delta
        self.diffusion = []
        for i in range(2):
            if lam[i] <= 1e-14:
                continue
            e = vecs[:, i]
            plus = _GatherPoint(grid, self.hstep * e[0], self.hstep * e[1])
            minus = _GatherPoint(grid, -self.hstep * e[0], -self.hstep * e[1])
            self.diffusion.append((float(lam[i]), plus, minus))
        self.advection = []
        for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            plus = _GatherPoint(grid, delta * e[0], delta * e[1])
            minus = _GatherPoint(grid, -delta * e[0], -delta * e[1])
            self.advection.append((plus, minus))
        lam_sum = float(np.clip(lam, 0.0, None).sum())
        self.cfl_coeff = (2.0 * lam_sum / self.hstep ** 2
                          + 2.0 * cfg.lf_dissipation / delta)
        self.interior_points = grid.points("interior")

    def stable_dt(self):
        if self.cfl_coeff <= 0.0:
            return self.cfg.t_end
        return self.cfg.cfl_number / self.cfl_coeff

    def resolve_dt(self):
        dt = self.cfg.dt if self.cfg.dt is not None else self.stable_dt()
        if dt * self.cfl_coeff > 1.0 + 1e-12:
            raise CflViolation(
                f"dt={dt:g} violates dt*({self.cfl_coeff:g}) <= 1")
        return dt


def step(g: GridFunction, eq: EquationSpec, cfg: SchemeConfig, t,
         plan: Optional[StencilPlan] = None, dt=None):
    """One explicit Euler step from time t; returns a new GridFunction."""
    if plan is None:
        plan = StencilPlan(g, eq, cfg)
    if dt is None:
        dt = plan.resolve_dt()
    elif dt * plan.cfl_coeff > 1.0 + 1e-12:
        raise CflViolation(f"dt={dt:g} violates dt*({plan.cfl_coeff:g}) <= 1")
    g.fill_boundary(t)
    V = g.values
    u = g.region_values("interior")
    rhs = np.zeros_like(u)
    for lam_i, plus, minus in plan.diffusion:
        rhs += lam_i * (plus(V) + minus(V) - 2.0 * u) / plan.hstep ** 2
    delta = g.dx
    grads = []
    visc = np.zeros_like(u)
    for plus, minus in plan.advection:
        up, um = plus(V), minus(V)
        grads.append((up - um) / (2.0 * delta))
        visc += up + um - 2.0 * u
    w = np.stack(grads, axis=-1)
    rhs -= eq.hamiltonian(plan.interior_points, w)
    rhs += cfg.lf_dissipation / (2.0 * delta) * visc
    out = g.copy()
    out.region_values("interior")[...] = u + dt * rhs
    if not np.all(np.isfinite(out.region_values("interior"))):
        raise NanDetected("non-finite values after step; check CFL and "
                          "boundary data")
    return out


def run(u0, eq: EquationSpec, cfg: SchemeConfig, box: Box, delta,
        snapshot_times=None, boundary_source=None, z_spacing=None, halo=None):
    """March from u0 to t_end, returning (time, GridFunction) snapshots.

    Snapshot times are hit exactly by shortening the last sub-step.
    With ``boundary_source`` given, the halo is Dirichlet data refreshed
    every step; otherwise the initial values are frozen there.
    """
    g = make_grid(box, delta, u0=u0, boundary_source=boundary_source,
                  halo=halo, z_spacing=z_spacing, eq=eq, cfg=cfg)
    plan = StencilPlan(g, eq, cfg)
    dt = plan.resolve_dt()
    times = sorted(snapshot_times) if snapshot_times else [cfg.t_end]
    if any(ts < 0 or ts > cfg.t_end + 1e-12 for ts in times):
        raise ValueError("snapshot times must lie in [0, t_end]")
    out = []
    t = 0.0
    for ts in times:
        while t < ts - 1e-14:
            sub = min(dt, ts - t)
            g = step(g, eq, cfg, t, plan=plan, dt=sub)
            t += sub
        g.fill_boundary(t)
        out.append((t, g.copy()))
    return out


@dataclass
class MonotonicityReport:
    worst_violation: float
    trials: int
    witness: Optional[tuple]

    @property
    def passed(self):
        return self.worst_violation <= 1e-12


def monotonicity_probe(g: GridFunction, eq, cfg, t, trials, seed=0,
                       amplitude=1e-2, dt=None):
    """Empirical check that the update is nondecreasing in its inputs.

    Adds random nonnegative perturbations to the state and verifies the
    stepped values never drop more than 1e-12 below the unperturbed step.
    Run on grids without a boundary source so perturbations survive the
    halo refresh.
    """
    plan = StencilPlan(g, eq, cfg)
    if dt is None:
        dt = plan.resolve_dt()
    rng = np.random.default_rng(seed)
    base = step(g, eq, cfg, t, plan=plan, dt=dt).region_values("interior")
    worst = -np.inf
    witness = None
    for _ in range(trials):
        gp = g.copy()
        gp.values += amplitude * rng.uniform(0.0, 1.0, g.values.shape)
        pert = step(gp, eq, cfg, t, plan=plan, dt=dt).region_values("interior")
        drop = base - pert
        i = int(np.argmax(drop))
        if drop.flat[i] > worst:
            worst = float(drop.flat[i])
            witness = np.unravel_index(i, drop.shape)
    return MonotonicityReport(worst_violation=worst, trials=trials,
                              witness=witness)


def inner_half_box_mask(g: GridFunction):
    """Mask (over box nodes) of the centered half-length sub-box."""
    pts = g.points("box")
    c = g.box.center()
    Lx, Ly, Lz = g.box.lengths()
    return ((np.abs(pts[..., 0] - c[0]) <= Lx / 4.0)
            & (np.abs(pts[..., 1] - c[1]) <= Ly / 4.0)
            & (np.abs(pts[..., 2] - c[2]) <= Lz / 4.0))


def save_snapshot(g: GridFunction, prefix, t):
    """Write box-node values as flat little-endian float64 plus metadata.

    Binary layout is row-major with x fastest (index order z, y, x); the
    sidecar ``.meta`` file is plain ``key = value`` text.
    """
    vals = g.region_values("box")
    vals.transpose(2, 1, 0).astype("<f8").tofile(f"{prefix}.bin")
    lines = [
        f"time = {t!r}",
        f"xlim = {g.box.xlim[0]!r} {g.box.xlim[1]!r}",
        f"ylim = {g.box.ylim[0]!r} {g.box.ylim[1]!r}",
        f"zlim = {g.box.zlim[0]!r} {g.box.zlim[1]!r}",
        f"nx = {g.nx}", f"ny = {g.ny}", f"nz = {g.nz}",
        f"dx = {g.dx!r}", f"dy = {g.dy!r}", f"dz = {g.dz!r}",
        "layout = little-endian float64, row-major, x fastest",
    ]
    with open(f"{prefix}.meta", "w") as fh:
        fh.write("\n".join(lines) + "\n")


def export_slice(g: GridFunction, path, z_value=0.0, t=None):
    """CSV of the box-node plane nearest to z = z_value (x, y, u rows)."""
    xs, ys, zs = g.axis_coords()
    h = g.halo
    k = h + int(np.argmin(np.abs(zs[h: h + g.nz] - z_value)))
    vals = g.values[h: h + g.nx, h: h + g.ny, k]
    with open(path, "w") as fh:
        fh.write("x,y,u\n")
        for i in range(g.nx):
            for j in range(g.ny):
                fh.write(f"{xs[h + i]!r},{ys[h + j]!r},{vals[i, j]!r}\n")
