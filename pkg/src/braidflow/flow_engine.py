"""Radially symmetric Hamiltonian-type flows in the chart.

A flow is generated by a piecewise-linear angular-speed profile w(r): every
point rotates about the origin at angular rate 2*pi*w(|z|) turns per unit
time.  Such maps preserve the round area measure, fix the origin and the
infinity point, and commute whenever their profiles have disjoint supports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .chart_geometry import ChartPoint, INFINITY, TWO_PI, radius_from_height


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge to the requested tolerance."""


@dataclass(frozen=True)
class RadialProfile:
    """Piecewise-linear angular speed profile on [0, infinity).

    Knot radii are strictly increasing; the value is held constant below the
    first knot and beyond the last one.  A zero final value gives compact
    support; a nonzero one models a rigid tail (constant rotation far out).
    """

    knots: tuple[tuple[float, float], ...]
    json_form: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.knots:
            raise ValueError("profile needs at least one knot")
        radii = [r for r, _ in self.knots]
        if any(r < 0 for r in radii):
            raise ValueError("knot radii must be nonnegative")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("knot radii must be strictly increasing")

    @property
    def radii(self) -> np.ndarray:
        return np.array([r for r, _ in self.knots])

    @property
    def values(self) -> np.ndarray:
        return np.array([w for _, w in self.knots])

    @property
    def tail_value(self) -> float:
        return self.knots[-1][1]

    @property
    def has_compact_support(self) -> bool:
        return self.tail_value == 0.0

    def omega(self, r):
        """Angular speed (turns per unit time) at chart radius r."""
        out = np.interp(np.asarray(r, dtype=float), self.radii, self.values)
        return float(out) if np.isscalar(r) else out

    def omega_tilde(self, u):
        """Profile as a function of the height coordinate u in [-1, 1]."""
        uu = np.asarray(u, dtype=float)
        near_bottom = uu <= -1.0 + 1e-15
        safe = np.where(near_bottom, 0.0, uu)
        vals = self.omega(radius_from_height(np.clip(safe, -1.0 + 1e-15, 1.0)))
        vals = np.where(near_bottom, self.tail_value, vals)
        return float(vals) if np.isscalar(u) else vals

    def support_bounds(self) -> tuple[float, float]:
        """Closure of {r : omega(r) != 0} as an interval (lo, hi); hi may be inf."""
        rs, ws = self.radii, self.values
        if np.all(ws == 0.0):
            return (0.0, 0.0)
        nz = np.nonzero(ws != 0.0)[0]
        first, last = nz[0], nz[-1]
        lo = 0.0 if first == 0 else rs[first - 1]
        hi = math.inf if last == len(ws) - 1 else rs[last + 1]
        return (float(lo), float(hi))

    def breakpoint_radii(self) -> list[float]:
        return [float(r) for r, _ in self.knots]


def step_profile(height: float, r0: float, ramp: float = 0.01) -> RadialProfile:
    """Constant angular speed inside radius r0, linear ramp to zero at r0+ramp."""
    if ramp <= 0:
        raise ValueError("ramp width must be positive")
    form = {"type": "step", "lambda": height, "r0": r0, "ramp": ramp}
    return RadialProfile(((r0, height), (r0 + ramp, 0.0)), json_form=form)


def annulus_profile(height: float, r_in: float, r_out: float,
                    ramp: float = 0.01) -> RadialProfile:
    """Angular speed supported on the annulus r_in <= |z| <= r_out."""
    if not (0 <= r_in and r_in + ramp < r_out - ramp):
        raise ValueError("annulus too thin for the requested ramp")
    form = {"type": "annulus", "height": height, "r_in": r_in,
            "r_out": r_out, "ramp": ramp}
    return RadialProfile(((r_in, 0.0), (r_in + ramp, height),
                          (r_out - ramp, height), (r_out, 0.0)),
                         json_form=form)


def constant_profile(value: float) -> RadialProfile:
    """Rigid rotation at a constant rate; support is the whole plane."""
    return RadialProfile(((0.0, value),),
                         json_form={"type": "constant", "value": value})


def profile_to_json(profile: RadialProfile) -> dict:
    if profile.json_form is not None:
        return dict(profile.json_form)
    return {"knots": [[r, w] for r, w in profile.knots]}


def profile_from_json(data: dict | str) -> RadialProfile:
    if isinstance(data, str):
        data = json.loads(data)
    if "knots" in data:
        knots = tuple((float(r), float(w)) for r, w in data["knots"])
        return RadialProfile(knots, json_form={"knots": [[r, w] for r, w in knots]})
    if data.get("type") == "step":
        return step_profile(float(data["lambda"]), float(data["r0"]),
                            float(data.get("ramp", 0.01)))
    if data.get("type") == "annulus":
        return annulus_profile(float(data["height"]), float(data["r_in"]),
                               float(data["r_out"]),
                               float(data.get("ramp", 0.01)))
    if data.get("type") == "constant":
        return constant_profile(float(data["value"]))
    raise ValueError(f"unrecognised profile description: {data!r}")


def _intervals_disjoint(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[1] <= b[0] or b[1] <= a[0]


@dataclass(frozen=True)
class FlowSpec:
    """Weighted combination of radial profiles flowed for a fixed duration.

    With several components the supports must be pairwise disjoint so the
    component flows commute and the combination is unambiguous.
    """

    components: tuple[tuple[RadialProfile, float], ...]
    duration: float = 1.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        sup = [p.support_bounds() for p, w in self.components if w != 0.0]
        for i in range(len(sup)):
            for j in range(i + 1, len(sup)):
                if not _intervals_disjoint(sup[i], sup[j]):
                    raise ValueError("component supports overlap")

    @property
    def n_components(self) -> int:
        return len(self.components)

    def angular_rate(self, r):
        """Combined angular speed in turns per unit time at radius r."""
        rr = np.asarray(r, dtype=float)
        total = np.zeros_like(rr)
        for profile, weight in self.components:
            if weight != 0.0:
                total = total + weight * profile.omega(rr)
        return float(total) if np.isscalar(r) else total

    def breakpoint_radii(self) -> list[float]:
        out: set[float] = set()
        for profile, _ in self.components:
            out.update(profile.breakpoint_radii())
        return sorted(out)


def single_flow(profile: RadialProfile, duration: float = 1.0,
                weight: float = 1.0) -> FlowSpec:
    return FlowSpec(((profile, weight),), duration)


def velocity(spec: FlowSpec, t: float, z: ChartPoint) -> complex:
    """Chart velocity of the flow at time t through point z (autonomous)."""
    zz = z.require_finite()
    return 2j * math.pi * spec.angular_rate(abs(zz)) * zz


def flow_complex(spec: FlowSpec, t: float, zs: np.ndarray) -> np.ndarray:
    """Time-t map applied to an array of finite chart points."""
    zs = np.asarray(zs, dtype=complex)
    rate = spec.angular_rate(np.abs(zs))
    return zs * np.exp(2j * math.pi * t * rate)


def flow_map(spec: FlowSpec, t: float, z: ChartPoint) -> ChartPoint:
    if z.at_infinity:
        return INFINITY
    return ChartPoint(complex(flow_complex(spec, t, np.array([z.coord]))[0]))


def trajectory(spec: FlowSpec, z0: ChartPoint, time_grid: np.ndarray) -> np.ndarray:
    """Exact trajectory samples of z0 at the given times."""
    zz = z0.require_finite()
    rate = spec.angular_rate(abs(zz))
    return zz * np.exp(2j * math.pi * rate * np.asarray(time_grid, dtype=float))


def power(spec: FlowSpec, k: int) -> FlowSpec:
    """Flow whose endpoint map is the k-th power of spec's endpoint map."""
    if k == 0:
        return FlowSpec(tuple(), spec.duration)
    sign = 1.0 if k > 0 else -1.0
    comps = tuple((p, sign * w) for p, w in spec.components)
    return FlowSpec(comps, abs(k) * spec.duration)


def compose_specs(a: FlowSpec, b: FlowSpec) -> FlowSpec:
    """Composite of two commuting flows as a single unit-duration spec.

    Components are merged with effective weights weight*duration.  Equal
    profiles add up; distinct profiles must have disjoint supports.
    """
    merged: list[tuple[RadialProfile, float]] = []
    for spec in (a, b):
        for profile, weight in spec.components:
            eff = weight * spec.duration
            for idx, (q, wq) in enumerate(merged):
                if q.knots == profile.knots:
                    merged[idx] = (q, wq + eff)
                    break
            else:
                merged.append((profile, eff))
    merged = [(p, w) for p, w in merged if w != 0.0]
    return FlowSpec(tuple(merged), 1.0)


def _speed_integrand(r: np.ndarray, spec: FlowSpec, p: float) -> np.ndarray:
    # |X|^p against the 2*pi-mass area measure, reduced to the radial line.
    w = np.abs(spec.angular_rate(r))
    speed = TWO_PI * w * r / (1.0 + r * r)
    return speed ** p * 4.0 * math.pi * r * (1.0 + r * r) ** -2


def lp_length(spec: FlowSpec, p: float, rel_tol: float = 1e-8) -> float:
    """Length of the flow path in the L^p metric on area-preserving maps.

    The field is autonomous, so the length is duration * (integral of the
    pointwise speed to the p-th power against the round measure of total
    mass 2*pi) ** (1/p).  p = inf gives duration * (sup of the speed).
    """
    if not spec.components:
        return 0.0
    if p == math.inf:
        return spec.duration * _sup_speed(spec)
    if p < 1:
        raise ValueError("p must be >= 1 or inf")
    pts = [r for r in spec.breakpoint_radii() if r > 0]
    r_max = max(pts) if pts else 1.0
    val, err = integrate.quad(
        _speed_integrand, 0.0, r_max, args=(spec, p),
        points=pts, limit=400, epsrel=rel_tol, epsabs=0.0)
    tail, tail_err = integrate.quad(
        _speed_integrand, r_max, np.inf, args=(spec, p),
        limit=200, epsrel=rel_tol, epsabs=1e-14)
    total = val + tail
    if total > 0 and (err + tail_err) > 10 * rel_tol * total + 1e-13:
        raise QuadratureError(
            f"speed integral error {err + tail_err:.3e} too large for "
            f"value {total:.6e}")
    return spec.duration * total ** (1.0 / p)


def _sup_speed(spec: FlowSpec) -> float:
    pts = [r for r in spec.breakpoint_radii() if r > 0]
    # past max(1, last knot) the speed decays, so a grid out to here suffices
    hi = max(4.0 * max(pts) if pts else 0.0, 2.0)
    grid = np.linspace(0.0, hi, 20001)
    speed = TWO_PI * np.abs(spec.angular_rate(grid)) * grid / (1.0 + grid ** 2)
    best = float(np.max(speed))
    # one golden-section polish around the best grid point
    k = int(np.argmax(speed))
    lo, hi2 = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    for _ in range(80):
        m1 = lo + 0.382 * (hi2 - lo)
        m2 = lo + 0.618 * (hi2 - lo)
        f1 = TWO_PI * abs(spec.angular_rate(m1)) * m1 / (1.0 + m1 ** 2)
        f2 = TWO_PI * abs(spec.angular_rate(m2)) * m2 / (1.0 + m2 ** 2)
        if f1 < f2:
            lo = m1
        else:
            hi2 = m2
        best = max(best, f1, f2)
    return best
