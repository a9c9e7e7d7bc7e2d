"""Complex-time evolution of u_t = u_xx + u^2 along piecewise-linear time paths.

States live in the sine basis where the Laplacian is diagonal.  Each step
of length h along a unit direction d uses the complex increment d*h and
the fourth-order exponential Runge-Kutta scheme of Cox and Matthews, which
treats e^{lambda_n d h} exactly.  Segments must satisfy Re(d) >= 0; there
the linear factors have modulus at most one for every mode.

Step sizes are chosen by step doubling: one step of h is compared with two
of h/2 and the pair is combined by Richardson extrapolation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import quadode
from .errors import ComputationError, DomainError
from .spatial import SpatialGrid, StateField, dst_forward, dst_inverse, square_modes

__all__ = [
    "TimePath",
    "EvolveOptions",
    "Trajectory",
    "evolve",
    "evolve_ode_mode",
    "lower_existence_time",
    "calibrate_semigroup_constant",
    "phi_functions",
]

_SERIES_RADIUS = 1.0
_SERIES_TERMS = 24


@dataclass(frozen=True)
class TimePath:
    """Piecewise-linear path through the complex time plane.

    Times are absolute; a path normally starts at 0, but a path that
    continues an earlier evolution starts where that one ended.
    """

    waypoints: tuple[complex, ...]

    def __post_init__(self):
        pts = tuple(complex(w) for w in self.waypoints)
        if len(pts) < 2:
            raise DomainError("a time path needs at least two waypoints")
        for i, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
            d = b - a
            if d == 0:
                raise DomainError(f"waypoints {i} and {i + 1} coincide ({a})")
            if d.real < -1e-14 * max(1.0, abs(d)):
                raise DomainError(
                    f"segment {i} -> {i + 1} runs backwards in real time (Re dt = {d.real:.3g})"
                )
        object.__setattr__(self, "waypoints", pts)

    @classmethod
    def from_points(cls, *points: complex) -> "TimePath":
        return cls(tuple(points))

    @property
    def start(self) -> complex:
        return self.waypoints[0]

    @property
    def end(self) -> complex:
        return self.waypoints[-1]

    @property
    def segment_lengths(self) -> np.ndarray:
        w = np.asarray(self.waypoints)
        return np.abs(np.diff(w))

    @property
    def arc_length(self) -> float:
        return float(self.segment_lengths.sum())

    def conj(self) -> "TimePath":
        return TimePath(tuple(w.conjugate() for w in self.waypoints))

    def then(self, other: "TimePath") -> "TimePath":
        if abs(other.start - self.end) > 1e-14 * max(1.0, abs(self.end)):
            raise DomainError(f"path starting at {other.start} cannot continue one ending at {self.end}")
        return TimePath(self.waypoints + other.waypoints[1:])

    def to_json(self) -> str:
        return json.dumps([[w.real, w.imag] for w in self.waypoints])

    @classmethod
    def load(cls, path: str | Path) -> "TimePath":
        """Read a JSON array of [re, im] pairs; the first waypoint must be 0."""
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(raw, list) or len(raw) < 2:
            raise DomainError(f"{path}: expected a JSON array of at least two [re, im] pairs")
        pts = []
        for i, item in enumerate(raw):
            if (not isinstance(item, (list, tuple)) or len(item) != 2
                    or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in item)):
                raise DomainError(f"{path}: waypoint {i} is not a finite [re, im] pair: {item!r}")
            pts.append(complex(item[0], item[1]))
        if pts[0] != 0:
            raise DomainError(f"{path}: waypoint 0 must be [0, 0], got {raw[0]!r}")
        try:
            return cls(tuple(pts))
        except DomainError as exc:
            raise DomainError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class EvolveOptions:
    rel_tol: float = 1e-9
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    blowup_threshold: float = 1e8
    snapshot_stride: int = 10
    dt_max: float = 0.5
    max_steps: int = 200_000
    # stop as soon as the sup norm falls below this value (None: run the whole path)
    stop_below: float | None = None
    # test hook: evolve the linear heat flow only
    nonlinear: bool = True

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if not 0 < self.dt_min < self.dt_init:
            raise DomainError(f"need 0 < dt_min < dt_init, got {self.dt_min}, {self.dt_init}")
        if self.snapshot_stride < 1:
            raise DomainError("snapshot_stride must be >= 1")


@dataclass
class Trajectory:
    times: list[complex]
    arclength: list[float]
    snapshots: list[StateField]
    supnorms: list[float]
    status: str
    blowup_time: complex | None = None
    # every accepted step: columns s, Re t, Im t, sup norm
    history: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    n_accepted: int = 0
    n_rejected: int = 0

    @property
    def final(self) -> StateField:
        return self.snapshots[-1]

    @property
    def end_time(self) -> complex:
        return self.times[-1]

    @property
    def blew_up(self) -> bool:
        return self.status == "blowup"

    def at(self, t: complex, tol: float = 1e-12) -> StateField:
        """Snapshot taken at time t (waypoints are always recorded)."""
        for ti, snap in zip(self.times, self.snapshots):
            if abs(ti - t) <= tol * max(1.0, abs(t)):
                return snap
        raise DomainError(f"no snapshot at t = {t}")

    def conj(self) -> "Trajectory":
        hist = self.history.copy()
        hist[:, 2] *= -1
        return Trajectory(
            [t.conjugate() for t in self.times], list(self.arclength),
            [s.conj() for s in self.snapshots], list(self.supnorms), self.status,
            None if self.blowup_time is None else self.blowup_time.conjugate(),
            hist, self.n_accepted, self.n_rejected,
        )


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi_1, phi_2, phi_3 of exponential integrators, elementwise.

    Small |z| uses the Taylor series sum_j z^j / (j+k)!, the rest the
    closed forms; the series radius keeps cancellation below ~1e-15.
    """
    z = np.asarray(z, dtype=complex)
    p1 = np.empty_like(z)
    p2 = np.empty_like(z)
    p3 = np.empty_like(z)
    small = np.abs(z) < _SERIES_RADIUS
    zs = z[small]
    if zs.size:
        s1 = np.zeros_like(zs)
        s2 = np.zeros_like(zs)
        s3 = np.zeros_like(zs)
        for j in range(_SERIES_TERMS, -1, -1):
            s1 = s1 * zs + 1.0 / math.factorial(j + 1)
            s2 = s2 * zs + 1.0 / math.factorial(j + 2)
            s3 = s3 * zs + 1.0 / math.factorial(j + 3)
        p1[small], p2[small], p3[small] = s1, s2, s3
    zl = z[~small]
    if zl.size:
        e = np.exp(zl)
        p1[~small] = (e - 1.0) / zl
        p2[~small] = (e - 1.0 - zl) / zl**2
        p3[~small] = (e - 1.0 - zl - 0.5 * zl**2) / zl**3
    return p1, p2, p3


class _Stepper:
    """ETDRK4 on a fixed grid, with coefficients cached per complex step."""

    def __init__(self, grid: SpatialGrid, nonlinear: bool = True):
        self.lam = grid.eigenvalues.astype(complex)
        self.mask = grid.dealias_mask
        self.nonlinear = nonlinear
        self._cache: dict[complex, tuple] = {}

    def coefficients(self, dt: complex):
        key = complex(dt)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        z = self.lam * dt
        e = np.exp(z)
        e2 = np.exp(0.5 * z)
        q = 0.5 * dt * phi_functions(0.5 * z)[0]
        p1, p2, p3 = phi_functions(z)
        f1 = dt * (p1 - 3.0 * p2 + 4.0 * p3)
        f2 = dt * (p2 - 2.0 * p3)
        f3 = dt * (4.0 * p3 - p2)
        out = (e, e2, q, f1, f2, f3)
        if len(self._cache) > 64:
            self._cache.clear()
        self._cache[key] = out
        return out

    def rhs(self, a: np.ndarray) -> np.ndarray:
        if not self.nonlinear:
            return np.zeros_like(a)
        return square_modes(a, self.mask)

    def step(self, a: np.ndarray, dt: complex) -> np.ndarray:
        e, e2, q, f1, f2, f3 = self.coefficients(dt)
        na = self.rhs(a)
        a1 = e2 * a + q * na
        n1 = self.rhs(a1)
        a2 = e2 * a + q * n1
        n2 = self.rhs(a2)
        a3 = e2 * a1 + q * (2.0 * n2 - na)
        n3 = self.rhs(a3)
        return e * a + f1 * na + 2.0 * f2 * (n1 + n2) + f3 * n3


def _blowup_point(hist: list[tuple[float, float]]) -> float:
    """Arc-length position where 1/sup extrapolates to zero.

    Near blow-up 1/sup(s) is close to linear in the distance to the
    singularity; a quadratic through the last three samples removes the
    leading correction.  Falls back to the secant of the last two.
    """
    s = np.array([h[0] for h in hist[-3:]])
    y = 1.0 / np.array([h[1] for h in hist[-3:]])
    if len(s) < 2:
        return float(s[-1])
    slope = (y[-1] - y[-2]) / (s[-1] - s[-2])
    lin = s[-1] - y[-1] / slope if slope < 0 else s[-1]
    if len(s) < 3:
        return float(lin)
    coef = np.polyfit(s - s[-1], y, 2)
    roots = np.roots(coef)
    roots = roots[np.isreal(roots)].real
    roots = roots[(roots >= 0) & (roots <= 2.0 * max(lin - s[-1], 0.0) + 1e-300)]
    if roots.size == 0:
        return float(lin)
    return float(s[-1] + roots.min())


def evolve(u0: StateField, path: TimePath, opts: EvolveOptions | None = None) -> Trajectory:
    opts = opts or EvolveOptions()
    grid = u0.grid
    stepper = _Stepper(grid, opts.nonlinear)
    a = dst_forward(np.asarray(u0.values, dtype=complex))
    u = dst_inverse(a)
    sup0 = float(np.abs(u).max()) if u.size else 0.0

    times = [path.start]
    arcs = [0.0]
    snaps = [StateField(grid, u.copy())]
    sups = [sup0]
    history = [(0.0, path.start.real, path.start.imag, sup0)]
    recent = [(0.0, sup0)]

    h = opts.dt_init
    s_total = 0.0
    n_acc = n_rej = 0
    status = "completed"
    blowup_at = None
    wp = path.waypoints

    def snapshot(t, s, vals, sup):
        times.append(t)
        arcs.append(s)
        snaps.append(StateField(grid, vals.copy()))
        sups.append(sup)

    if opts.stop_below is not None and sup0 < opts.stop_below:
        return Trajectory(times, arcs, snaps, sups, status, None, np.array(history), 0, 0)

    for seg in range(len(wp) - 1):
        start, stop = wp[seg], wp[seg + 1]
        length = abs(stop - start)
        direction = (stop - start) / length
        pos = 0.0
        since_snap = 0
        recent = recent[-1:]
        while pos < length:
            if n_acc + n_rej >= opts.max_steps:
                raise ComputationError(f"step budget of {opts.max_steps} exhausted at t = {start + pos * direction}")
            last = False
            hh = min(h, opts.dt_max)
            if pos + hh >= length * (1.0 - 1e-13):
                hh = length - pos
                last = True
            dt = direction * hh
            full = stepper.step(a, dt)
            half = stepper.step(stepper.step(a, 0.5 * dt), 0.5 * dt)
            diff = dst_inverse(half - full)
            new = half + (half - full) / 15.0
            u_new = dst_inverse(new)
            sup_new = float(np.abs(u_new).max())
            err = float(np.abs(diff).max()) / 15.0
            scale = opts.rel_tol * max(sup_new, sup0, 1e-8)
            ok = np.isfinite(sup_new) and np.isfinite(err)
            ratio = err / scale if ok else np.inf

            if ok and ratio <= 1.0:
                a, u = new, u_new
                pos = length if last else pos + hh
                s_here = s_total + pos
                t_here = stop if last else start + pos * direction
                n_acc += 1
                since_snap += 1
                history.append((s_here, t_here.real, t_here.imag, sup_new))
                recent.append((s_here, sup_new))
                del recent[:-3]
                if last or since_snap >= opts.snapshot_stride:
                    snapshot(t_here, s_here, u, sup_new)
                    since_snap = 0
                if sup_new > opts.blowup_threshold:
                    status = "blowup"
                    break
                if opts.stop_below is not None and sup_new < opts.stop_below:
                    if not last:
                        snapshot(t_here, s_here, u, sup_new)
                    status = "completed"
                    break
                fac = 2.0 if ratio == 0 else min(2.0, max(0.2, 0.9 * ratio ** -0.2))
                # do not let a short landing step shrink the proposal
                if not last:
                    h = hh * fac
                else:
                    h = max(h, hh * fac)
            else:
                n_rej += 1
                fac = 0.2 if not ok else min(0.9, max(0.1, 0.9 * ratio ** -0.2))
                h = hh * fac
                if h < opts.dt_min:
                    grown = sups[-1] if not recent else recent[-1][1]
                    if grown > 100.0 * max(1.0, sup0):
                        status = "blowup"
                        break
                    raise ComputationError(
                        f"step size collapsed to {h:.3g} at t = {start + pos * direction} "
                        f"with sup norm {grown:.3g} (no blow-up in sight)"
                    )
        if status == "blowup":
            s_star = _blowup_point(recent)
            blowup_at = start + (s_star - s_total) * direction
            if times[-1] != history[-1][1] + 1j * history[-1][2]:
                snapshot(complex(history[-1][1], history[-1][2]), history[-1][0], u, history[-1][3])
            break
        if opts.stop_below is not None and history[-1][3] < opts.stop_below:
            break
        s_total += length

    return Trajectory(times, arcs, snaps, sups, status, blowup_at,
                      np.array(history), n_acc, n_rej)


def evolve_ode_mode(u0: StateField, path: TimePath) -> Trajectory:
    """Pure reaction flow u_t = u^2, solved pointwise in closed form.

    The solution at each grid point is meromorphic in t with a single pole
    at 1/u0(x_j); it blows up exactly when the path runs through one.
    """
    grid = u0.grid
    vals0 = np.asarray(u0.values, dtype=complex)
    poles = [(j, 1.0 / v) for j, v in enumerate(vals0) if v != 0]
    wp = path.waypoints
    times = [path.start]
    arcs = [0.0]
    snaps = [StateField(grid, vals0.copy())]
    sups = [float(np.abs(vals0).max())]
    s_total = 0.0
    for seg in range(len(wp) - 1):
        a, b = wp[seg], wp[seg + 1]
        d = b - a
        length = abs(d)
        hit = None
        for _, p in poles:
            s = ((p - a) * d.conjugate()).real / length**2
            if 0.0 <= s <= 1.0:
                off = abs(p - (a + s * d))
                if off <= quadode.BLOWUP_ATOL * max(1.0, abs(p)):
                    hit = s if hit is None else min(hit, s)
        if hit is not None:
            t_star = a + hit * d
            return Trajectory(times, arcs, snaps, sups, "blowup", t_star,
                              np.array([[s_total + hit * length, t_star.real, t_star.imag, np.inf]]))
        s_total += length
        vals = np.array([complex(quadode.ode_flow(b - path.start, v).value) for v in vals0])
        times.append(b)
        arcs.append(s_total)
        snaps.append(StateField(grid, vals))
        sups.append(float(np.abs(vals).max()))
    hist = np.array([[s, t.real, t.imag, m] for s, t, m in zip(arcs, times, sups)])
    return Trajectory(times, arcs, snaps, sups, "completed", None, hist)


def lower_existence_time(nu0: float, c_const: float) -> float:
    """Arc length along any admissible ray that a state of sup norm nu0 survives."""
    if not nu0 > 0 or not c_const > 0:
        raise DomainError(f"need nu0 > 0 and C > 0, got {nu0}, {c_const}")
    return 1.0 / (c_const**2 * nu0)


def calibrate_semigroup_constant(grid: SpatialGrid, n_samples: int = 32, seed: int = 0,
                                 extra: Sequence[np.ndarray] = (),
                                 angles: Sequence[float] = (0.0, math.pi / 4, -math.pi / 4,
                                                            math.pi / 2, -math.pi / 2),
                                 radii: np.ndarray | None = None) -> float:
    """Largest observed amplification sup|e^{zA} u| / sup|u| over sample data.

    z ranges over rays e^{i theta} r in the closed right half-plane.  The
    sample set is smooth random data (coefficients decaying like n^-2), the
    first few sine modes and whatever fields are passed in ``extra``.
    """
    rng = np.random.default_rng(seed)
    n = np.arange(1, grid.n_interior + 1)
    data = []
    for _ in range(n_samples):
        c = (rng.standard_normal(grid.n_interior) + 1j * rng.standard_normal(grid.n_interior)) / n**2
        data.append(c)
    for k in range(1, 5):
        c = np.zeros(grid.n_interior, dtype=complex)
        c[k - 1] = 1.0
        data.append(c)
    for f in extra:
        data.append(dst_forward(np.asarray(f, dtype=complex)))
    data = np.array(data)
    sup0 = np.abs(dst_inverse(data)).max(axis=1)
    radii = np.geomspace(1e-3, 3.0, 25) if radii is None else radii
    best = 1.0
    lam = grid.eigenvalues
    for theta in angles:
        d = complex(math.cos(theta), math.sin(theta))
        for r in radii:
            prop = np.exp(lam * d * r)
            sup = np.abs(dst_inverse(data * prop)).max(axis=1)
            best = max(best, float(np.max(sup / sup0)))
    return best
