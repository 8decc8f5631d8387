"""Scripted gaze trajectories with low-pass-filtered head jitter.

Routes are waypoint polylines traversed at constant speed and a fixed
sample rate; Gaussian jitter is filtered below a cutoff frequency so it
sways like an unsteady head rather than flickering per sample, and its
amplitude is rescaled so the filtered noise keeps the requested sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import GazeSample
from .geometry import Point
from .graph import Graph
from .paths import TaskPath


@dataclass(frozen=True)
class TrajectoryProfile:
    speed: float = 0.3
    jitter_sigma: float = 0.01
    jitter_cutoff: float = 2.0
    sample_rate: float = 60.0
    corner_overshoot: float = 0.02
    seed: int = 0

    def validate(self) -> None:
        if min(self.speed, self.jitter_cutoff, self.sample_rate) <= 0:
            raise ValueError("speed, jitter_cutoff, and sample_rate must be positive")
        if self.jitter_sigma < 0 or self.corner_overshoot < 0:
            raise ValueError("jitter_sigma and corner_overshoot must be >= 0")
        if self.sample_rate < 2 * self.jitter_cutoff:
            raise ValueError("sample_rate must be at least twice jitter_cutoff")


class JitterStream:
    """Per-trial stateful noise source: white Gaussian through a one-pole IIR.

    The filter state persists across route changes, so corrective re-routes
    continue the same noise realization.
    """

    def __init__(self, profile: TrajectoryProfile) -> None:
        self._rng = np.random.default_rng(profile.seed)
        dt = 1.0 / profile.sample_rate
        rc = 1.0 / (2.0 * math.pi * profile.jitter_cutoff)
        self._alpha = dt / (rc + dt)
        # Steady-state variance of the filtered unit noise is a/(2-a).
        gain = math.sqrt((2.0 - self._alpha) / self._alpha) if self._alpha > 0 else 0.0
        self._scale = profile.jitter_sigma * gain
        self._state = np.zeros(2)

    def next(self) -> tuple[float, float]:
        white = self._rng.standard_normal(2)
        self._state += self._alpha * (white - self._state)
        return (self._state[0] * self._scale, self._state[1] * self._scale)


def route_with_overshoot(
    waypoints: list[Point], overshoot: float, turn_threshold_deg: float = 15.0
) -> list[Point]:
    """Insert an overshoot spur past every genuine corner.

    At each interior waypoint where the route changes direction by more
    than the threshold, the route continues along the incoming direction
    for ``overshoot`` meters before correcting toward the next waypoint,
    the way a fast head movement overruns a turn. The correction heads
    onward rather than re-centering on the corner (re-centering would make
    the gaze loiter at the waypoint). Collinear waypoints get no spur.
    """
    if overshoot <= 0 or len(waypoints) < 3:
        return list(waypoints)
    out: list[Point] = [waypoints[0]]
    for i in range(1, len(waypoints) - 1):
        prev, cur, nxt = out[-1], waypoints[i], waypoints[i + 1]
        out.append(cur)
        d_in = (cur[0] - prev[0], cur[1] - prev[1])
        d_out = (nxt[0] - cur[0], nxt[1] - cur[1])
        n_in = math.hypot(*d_in)
        n_out = math.hypot(*d_out)
        if n_in < 1e-12 or n_out < 1e-12:
            continue
        cosang = (d_in[0] * d_out[0] + d_in[1] * d_out[1]) / (n_in * n_out)
        ang = math.degrees(math.acos(min(max(cosang, -1.0), 1.0)))
        if ang > turn_threshold_deg:
            out.append((cur[0] + d_in[0] / n_in * overshoot, cur[1] + d_in[1] / n_in * overshoot))
    out.append(waypoints[-1])
    return out


class RouteSampler:
    """Walks waypoint routes at constant speed, emitting jittered samples.

    Routes can be replaced mid-flight (corrective re-routing); the clock
    and the jitter stream carry on. ``next_sample`` returns None once the
    current route is exhausted.
    """

    def __init__(self, profile: TrajectoryProfile, pace=None) -> None:
        profile.validate()
        self.profile = profile
        # Optional position -> speed-factor function (care zones around
        # targets slow a human operator down).
        self.pace = pace
        self._jitter = JitterStream(profile) if profile.jitter_sigma > 0 else None
        self._dt = 1.0 / profile.sample_rate
        self._step_len = profile.speed * self._dt
        self.t = 0.0
        self._points: list[Point] = []
        self._seg = 0
        self._seg_pos = 0.0
        self._pos: Point | None = None

    @property
    def position(self) -> Point | None:
        return self._pos

    def set_route(self, waypoints: list[Point]) -> None:
        pts = [waypoints[0]]
        for p in waypoints[1:]:
            if math.dist(p, pts[-1]) > 1e-12:
                pts.append(p)
        self._points = pts
        self._seg = 0
        self._seg_pos = 0.0
        self._pos = pts[0]

    def exhausted(self) -> bool:
        return not self._points or self._seg >= len(self._points) - 1

    def next_sample(self) -> GazeSample | None:
        if self._pos is None:
            return None
        if not self.exhausted():
            remaining = self._step_len
            if self.pace is not None:
                remaining *= self.pace(self._pos)
            while remaining > 0 and self._seg < len(self._points) - 1:
                a = self._points[self._seg]
                b = self._points[self._seg + 1]
                seg_len = math.dist(a, b)
                room = seg_len - self._seg_pos
                if remaining < room:
                    self._seg_pos += remaining
                    remaining = 0.0
                else:
                    remaining -= room
                    self._seg += 1
                    self._seg_pos = 0.0
            if self._seg >= len(self._points) - 1:
                self._pos = self._points[-1]
            else:
                a = self._points[self._seg]
                b = self._points[self._seg + 1]
                seg_len = math.dist(a, b)
                f = self._seg_pos / seg_len
                self._pos = (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
        elif self._points:
            self._pos = self._points[-1]
        else:
            return None
        self.t += self._dt
        x, y = self._pos
        if self._jitter is not None:
            jx, jy = self._jitter.next()
            sample = GazeSample(self.t, (x + jx, y + jy))
        else:
            sample = GazeSample(self.t, (x, y))
        return sample

    def hold(self) -> GazeSample:
        """One sample holding the current route position (with jitter)."""
        self.t += self._dt
        x, y = self._pos if self._pos is not None else (0.0, 0.0)
        if self._jitter is not None:
            jx, jy = self._jitter.next()
            return GazeSample(self.t, (x + jx, y + jy))
        return GazeSample(self.t, (x, y))


def ideal_route(task_path: TaskPath, graph: Graph, profile: TrajectoryProfile) -> list[Point]:
    waypoints = [graph.node(nid).pos for nid in task_path.nodes]
    return route_with_overshoot(waypoints, profile.corner_overshoot)


def gen_trajectory(
    task_path: TaskPath,
    graph: Graph,
    profile: TrajectoryProfile,
    task: str = "selection",
    pad_seconds: float = 0.5,
) -> list[GazeSample]:
    """Scripted gaze samples along the task path, plus a settling tail.

    Links are straight, so the node-to-node route of the selection task
    and the along-the-links route of the tracing task coincide; both get
    corner overshoot at direction changes. Deterministic per profile seed.
    """
    if task not in ("selection", "tracing"):
        raise ValueError(f"unknown task {task!r}")
    sampler = RouteSampler(profile)
    sampler.set_route(ideal_route(task_path, graph, profile))
    samples: list[GazeSample] = []
    while not sampler.exhausted():
        s = sampler.next_sample()
        if s is None:
            break
        samples.append(s)
    for _ in range(int(pad_seconds * profile.sample_rate)):
        samples.append(sampler.hold())
    return samples
