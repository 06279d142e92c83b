"""Closed configuration-space loops traced by a flow, and their braid data.

A loop is built from three segments: a short path from the base tuple to the
sampled tuple, the flow trace itself, and a short path back to base.  All
angular quantities (winding, total variation, crossing counts, braid letters)
are computed from one shared set of refined samples per loop, treating the
piecewise-linear interpolation as the curve itself.  Along a straight chord
the relative angle of any pair moves monotonically, so once every sampled
step is below the refinement threshold the polygonal model crosses exactly
the same projection rays as its chords and the combinatorics are exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .chart_geometry import ChartPoint, geodesic_path
from .flow_engine import FlowSpec

DEFAULT_SEPARATION = 1e-9
DEFAULT_MAX_STEP = math.pi / 8
REFINE_CAP = 2 ** 20
DEFAULT_DIRECTION = complex(np.exp(1j * 0.7528431093))
_RETRY_TURN = 0.37311


class TraceRejection(Exception):
    """Sample hit a measure-zero degeneracy; caller should resample."""


class SeparationError(TraceRejection):
    """Tuple points closer than the separation threshold."""


class PathCollisionError(TraceRejection):
    """A segment passes through (or too near) a pairwise collision."""


class RefinementError(RuntimeError):
    """Angle refinement exceeded the sample cap without converging."""


class ExtractionError(RuntimeError):
    """No generic projection direction found within the retry budget."""


class DegenerateDirectionError(Exception):
    """Projection direction tangent or aligned for this loop; perturb it."""


@dataclass(frozen=True)
class ConfigTuple:
    points: tuple[ChartPoint, ...]

    def __post_init__(self):
        zs = []
        for pt in self.points:
            zs.append(pt.require_finite())
        for i in range(len(zs)):
            for j in range(i + 1, len(zs)):
                if abs(zs[i] - zs[j]) <= DEFAULT_SEPARATION:
                    raise SeparationError(
                        f"points {i} and {j} are {abs(zs[i]-zs[j]):.3e} apart")

    @property
    def n(self) -> int:
        return len(self.points)

    def coords(self) -> np.ndarray:
        return np.array([p.coord for p in self.points], dtype=complex)


def tuple_from_coords(zs) -> ConfigTuple:
    return ConfigTuple(tuple(ChartPoint(complex(z)) for z in zs))


def base_tuple(n: int, eps: float = 0.1) -> ConfigTuple:
    """Roots-of-unity base configuration eps * e^(2*pi*i*k/n), k = 1..n."""
    if n < 1 or eps <= 0:
        raise ValueError("need n >= 1 and eps > 0")
    ks = np.arange(1, n + 1)
    return tuple_from_coords(eps * np.exp(2j * math.pi * ks / n))


def random_tuple(rng: np.random.Generator, n: int) -> ConfigTuple:
    """One draw of n independent round-measure points; may raise SeparationError."""
    a = rng.random(n)
    r = np.sqrt(a / (1.0 - a))
    theta = rng.random(n) * 2.0 * math.pi
    return tuple_from_coords(r * np.exp(1j * theta))


@dataclass
class Segment:
    kind: str
    times: np.ndarray
    points: np.ndarray  # (len(times), n) complex


def _pair_index(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _wrapped_steps(z: np.ndarray) -> np.ndarray:
    """Principal-value angle increments along axis 0 of a complex array."""
    ang = np.angle(z)
    d = np.diff(ang, axis=0)
    return (d + math.pi) % (2.0 * math.pi) - math.pi


def _refine(evaluate, t0: float, t1: float, n_initial: int, kind: str,
            max_step: float, pairs: list[tuple[int, int]]) -> Segment:
    """Sample evaluate() on [t0, t1] until all pair-angle steps are small."""
    times = np.linspace(t0, t1, n_initial)
    while True:
        pts = evaluate(times)
        if not pairs:
            return Segment(kind, times, pts)
        rel = np.stack([pts[:, i] - pts[:, j] for i, j in pairs], axis=1)
        steps = np.abs(_wrapped_steps(rel))
        bad = np.nonzero(np.max(steps, axis=1) > max_step)[0]
        if bad.size == 0:
            return Segment(kind, times, pts)
        if times.size + bad.size > REFINE_CAP:
            raise RefinementError(
                f"{kind} segment needs more than {REFINE_CAP} samples")
        mids = 0.5 * (times[bad] + times[bad + 1])
        times = np.sort(np.concatenate([times, mids]))


def _check_separation(pts: np.ndarray, delta: float, kind: str):
    n = pts.shape[1]
    for i in range(n):
        for j in range(i + 1, n):
            m = float(np.min(np.abs(pts[:, i] - pts[:, j])))
            if m <= delta:
                raise PathCollisionError(
                    f"{kind} segment brings points {i},{j} within {m:.3e}")


def _linear_min_distance(a0: complex, a1: complex) -> float:
    """Exact min over t in [0,1] of |(1-t) a0 + t a1|."""
    d = a1 - a0
    dd = abs(d) ** 2
    if dd == 0.0:
        return abs(a0)
    t = -((a0 * d.conjugate()).real) / dd
    t = min(1.0, max(0.0, t))
    return abs(a0 + t * d)


def short_path(frm: ConfigTuple, to: ConfigTuple, mode: str = "linear",
               delta_sep: float = DEFAULT_SEPARATION,
               max_step: float = DEFAULT_MAX_STEP) -> Segment:
    """Coordinate-wise path between tuples, rejected on near-collisions.

    Linear mode moves each point along a straight chart chord, and the
    pairwise minimum distance is checked in closed form.  Geodesic mode moves
    along great circles and checks separation at the refined samples only.
    """
    if frm.n != to.n:
        raise ValueError("tuples have different sizes")
    za, zb = frm.coords(), to.coords()
    pairs = _pair_index(frm.n)
    if mode == "linear":
        for i, j in pairs:
            if _linear_min_distance(za[i] - za[j], zb[i] - zb[j]) <= delta_sep:
                raise PathCollisionError(f"chords of points {i},{j} collide")

        def evaluate(ts):
            s = ts[:, None]
            return (1.0 - s) * za[None, :] + s * zb[None, :]

        return _refine(evaluate, 0.0, 1.0, 17, "short", max_step, pairs)
    if mode == "geodesic":
        pa = frm.points
        pb = to.points

        def evaluate(ts):
            out = np.empty((len(ts), frm.n), dtype=complex)
            for col, (x, y) in enumerate(zip(pa, pb)):
                for row, t in enumerate(ts):
                    out[row, col] = geodesic_path(x, y, float(t)).require_finite()
            return out

        seg = _refine(evaluate, 0.0, 1.0, 33, "short", max_step, pairs)
        _check_separation(seg.points, delta_sep, "short")
        return seg
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class LoopTrace:
    base: ConfigTuple
    spec: FlowSpec
    duration: float
    segments: tuple[Segment, ...]
    _pair_cache: dict = field(default_factory=dict, repr=False)
    _samples_cache: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.base.n

    def samples(self) -> np.ndarray:
        """All loop samples, junction duplicates dropped; closed exactly."""
        if self._samples_cache is None:
            parts = [self.segments[0].points]
            for seg in self.segments[1:]:
                parts.append(seg.points[1:])
            self._samples_cache = np.concatenate(parts, axis=0)
        return self._samples_cache

    def pair_angles(self, i: int, j: int) -> np.ndarray:
        """Unwrapped angle of z_i - z_j along the loop, in radians."""
        if i == j:
            raise ValueError("need two distinct strands")
        if (i, j) in self._pair_cache:
            return self._pair_cache[(i, j)]
        if (j, i) in self._pair_cache:
            psi = self._pair_cache[(j, i)] + math.pi
            self._pair_cache[(i, j)] = psi
            return psi
        z = self.samples()
        w = z[:, i] - z[:, j]
        steps = _wrapped_steps(w[:, None])[:, 0]
        psi = np.empty(w.shape[0])
        psi[0] = math.atan2(w[0].imag, w[0].real)
        np.cumsum(steps, out=psi[1:])
        psi[1:] += psi[0]
        self._pair_cache[(i, j)] = psi
        return psi


def build_loop(spec: FlowSpec, x: ConfigTuple, base: ConfigTuple,
               mode: str = "linear", delta_sep: float = DEFAULT_SEPARATION,
               max_step: float = DEFAULT_MAX_STEP) -> LoopTrace:
    """Short path in, flow trace, short path back; refined and collision-checked."""
    if x.n != base.n:
        raise ValueError("tuple sizes differ")
    inbound = short_path(base, x, mode, delta_sep, max_step)
    zx = x.coords()
    T = spec.duration
    rates = np.atleast_1d(spec.angular_rate(np.abs(zx)))
    spread = float(np.max(rates) - np.min(rates)) if len(zx) > 1 else 0.0

    def evaluate(ts):
        # same arithmetic as flow_engine.trajectory, one row per time
        return zx[None, :] * np.exp(2j * math.pi * rates[None, :] * ts[:, None])

    n_init = max(17, int(math.ceil(4.0 * spread * T)) + 1)
    flow_seg = _refine(evaluate, 0.0, T, n_init, "flow", max_step,
                       _pair_index(x.n))
    _check_separation(flow_seg.points, delta_sep, "flow")
    y = tuple_from_coords(flow_seg.points[-1])
    outbound = short_path(y, base, mode, delta_sep, max_step)
    return LoopTrace(base, spec, T, (inbound, flow_seg, outbound))


def winding(loop: LoopTrace, i: int, j: int) -> float:
    """Net turns of z_i - z_j around the loop; integer up to roundoff."""
    psi = loop.pair_angles(i, j)
    turns = (psi[-1] - psi[0]) / (2.0 * math.pi)
    if abs(turns - round(turns)) > 1e-6:
        raise RefinementError(
            f"closed-loop winding {turns} off an integer beyond tolerance")
    return float(turns)


def total_angular_variation(loop: LoopTrace, i: int, j: int) -> float:
    """Total variation of the pair angle, in turns; at least |winding|."""
    psi = loop.pair_angles(i, j)
    return float(np.sum(np.abs(np.diff(psi)))) / (2.0 * math.pi)


def crossing_count(loop: LoopTrace, i: int, j: int, omega: complex) -> int:
    """Number of loop times where (z_i - z_j)/|z_i - z_j| equals omega."""
    counts = crossing_counts(loop, i, j, np.array([omega], dtype=complex))
    return int(counts[0])


def crossing_counts(loop: LoopTrace, i: int, j: int,
                    omegas: np.ndarray) -> np.ndarray:
    """crossing_count for many directions at once (one pass over the edges)."""
    psi = loop.pair_angles(i, j)
    chi = np.angle(omegas)
    lo = np.floor((psi[:-1, None] - chi[None, :]) / (2.0 * math.pi))
    hi = np.floor((psi[1:, None] - chi[None, :]) / (2.0 * math.pi))
    exact = (psi[:, None] - chi[None, :]) % (2.0 * math.pi) == 0.0
    if np.any(exact):
        raise DegenerateDirectionError("a sample aligns exactly with omega")
    return np.abs(hi - lo).sum(axis=0).astype(int)


def _pair_events(psi: np.ndarray, w: np.ndarray, chi: float):
    """Ray-crossing events of one pair against direction angle chi.

    Returns (edge, fraction, parity, sign) per event, where parity 0 means
    the relative vector points along +omega (first strand on top) and sign
    +1 means the relative angle was increasing (counterclockwise).
    """
    rel = (psi - chi) / math.pi
    if np.any(rel == np.round(rel)):
        raise DegenerateDirectionError("sample lies exactly on the ray")
    lo = np.floor(rel[:-1])
    hi = np.floor(rel[1:])
    hit = np.nonzero(hi != lo)[0]
    events = []
    for e in hit:
        level = max(lo[e], hi[e])  # single level crossed; steps < pi/8
        if abs(hi[e] - lo[e]) != 1.0:
            raise DegenerateDirectionError("multiple rays crossed in one edge")
        u = np.exp(1j * (chi + level * math.pi))
        ya = (w[e] / u).imag
        yb = (w[e + 1] / u).imag
        if ya == yb:
            raise DegenerateDirectionError("tangent edge")
        s = ya / (ya - yb)
        parity = int(level) % 2
        sign = 1 if psi[e + 1] > psi[e] else -1
        events.append((int(e), float(s), parity, sign))
    return events


def extract_braid(loop: LoopTrace, omega: complex | None = None,
                  max_retries: int = 16):
    """Braid word of the loop from the projection along a generic direction.

    Strands are ordered by the projection coordinate; every adjacent swap
    emits one letter whose sign is the rotation sense of the pair (a full
    counterclockwise relative turn of two strands gives s_k s_k, matching the
    convention that the closure of s_1^2 is the positively linked Hopf link).
    Degenerate directions are retried with a deterministic turn.
    """
    from .braid_algebra import BraidWord

    n = loop.n
    if n == 1:
        return BraidWord((), 1)
    z = loop.samples()
    pairs = _pair_index(n)
    base_omega = DEFAULT_DIRECTION if omega is None else omega
    last_err: Exception | None = None
    for attempt in range(max_retries):
        om = base_omega * complex(np.exp(1j * _RETRY_TURN * attempt))
        om /= abs(om)
        chi = math.atan2(om.imag, om.real)
        try:
            return _extract_with_direction(loop, z, pairs, om, chi, n)
        except DegenerateDirectionError as err:
            last_err = err
    raise ExtractionError(
        f"no generic projection direction in {max_retries} tries: {last_err}")


def _extract_with_direction(loop: LoopTrace, z: np.ndarray, pairs, om, chi, n):
    from .braid_algebra import BraidWord, permutation

    positions = (z[0] / om).imag
    order = list(np.argsort(positions))
    initial_order = order.copy()
    if len(set(positions.tolist())) != n:
        raise DegenerateDirectionError("projection ties at the base tuple")
    events = []
    for (i, j) in pairs:
        psi = loop.pair_angles(i, j)
        w = z[:, i] - z[:, j]
        for (e, s, parity, sign) in _pair_events(psi, w, chi):
            events.append((e, s, i, j, parity, sign))
    events.sort(key=lambda ev: (ev[0], ev[1]))
    for a, b in zip(events, events[1:]):
        if a[0] == b[0] and a[1] == b[1]:
            raise DegenerateDirectionError("simultaneous crossings")
    letters = []
    for (e, s, i, j, parity, sign) in events:
        pos_i = order.index(i)
        pos_j = order.index(j)
        if abs(pos_i - pos_j) != 1:
            raise DegenerateDirectionError("non-adjacent strands swapped")
        k = min(pos_i, pos_j) + 1
        letters.append(sign * k)
        order[pos_i], order[pos_j] = order[pos_j], order[pos_i]
    word = BraidWord(tuple(letters), n)
    if order != initial_order:
        raise DegenerateDirectionError("strand order did not close up")
    if permutation(word) != tuple(range(n)):
        raise ExtractionError("extracted word is not a pure braid")
    return word


def trace_to_csv(loop: LoopTrace, fileobj) -> None:
    """Dump the loop samples as (segment, t, strand, re, im) rows."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["segment", "t", "strand", "re", "im"])
    for seg in loop.segments:
        for t, row in zip(seg.times, seg.points):
            for strand, val in enumerate(row):
                writer.writerow([seg.kind, repr(float(t)), strand,
                                 repr(float(val.real)), repr(float(val.imag))])
