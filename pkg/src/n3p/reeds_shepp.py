"""Reeds-Shepp shortest paths for a car that drives both ways with bounded curvature.

Candidate words are solved in the start-centered frame with unit turning
radius and scaled back by the curvature bound. The base formulas cover the
CSC, CCC, CCCC, CCSC and CCSCC families; time-flip, reflection and (for the
asymmetric families) backwards variants produce the full word set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import (
    DS_CHECK,
    ObstacleCloud,
    Pose,
    VehicleSpec,
    integrate_arc,
    poses_in_collision,
    sample_segment,
)

_ZERO = 1e-10
_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class RSSegment:
    kind: str  # "S", "L" or "R"
    length: float  # meters, >= 0
    direction: int  # +1 forward, -1 reverse

    def curvature(self, kappa: float) -> float:
        if self.kind == "S":
            return 0.0
        return kappa if self.kind == "L" else -kappa


@dataclass(frozen=True)
class RSPath:
    segments: tuple[RSSegment, ...]
    kappa: float

    @property
    def total_length(self) -> float:
        return sum(seg.length for seg in self.segments)

    @property
    def word(self) -> str:
        return "".join(seg.kind + ("+" if seg.direction > 0 else "-") for seg in self.segments)

    def endpoint(self, start: Pose) -> Pose:
        x, y, th = start.as_tuple()
        for seg in self.segments:
            x, y, th = integrate_arc(x, y, th, seg.curvature(self.kappa), seg.direction * seg.length)
        return Pose(x, y, th)

    def mirrored(self) -> "RSPath":
        """The same word with L and R exchanged."""
        swap = {"L": "R", "R": "L", "S": "S"}
        return RSPath(tuple(RSSegment(swap[s.kind], s.length, s.direction) for s in self.segments), self.kappa)


def _mod2pi(x: float) -> float:
    v = math.fmod(x, 2.0 * math.pi)
    if v < -math.pi:
        v += 2.0 * math.pi
    elif v > math.pi:
        v -= 2.0 * math.pi
    return v


def _polar(x: float, y: float) -> tuple[float, float]:
    return math.hypot(x, y), math.atan2(y, x)


def _tau_omega(u, v, xi, eta, phi):
    delta = _mod2pi(u - v)
    a = math.sin(u) - math.sin(delta)
    b = math.cos(u) - math.cos(delta) - 1.0
    t1 = math.atan2(eta * a - xi * b, xi * a + eta * b)
    t2 = 2.0 * (math.cos(delta) - math.cos(v) - math.cos(u)) + 3.0
    tau = _mod2pi(t1 + math.pi) if t2 < 0 else _mod2pi(t1)
    omega = _mod2pi(tau - u + v - phi)
    return tau, omega


# Base formulas. Each returns (t, u, v) or None.

def _lp_sp_lp(x, y, phi):
    u, t = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if t >= -_ZERO:
        v = _mod2pi(phi - t)
        if v >= -_ZERO:
            return t, u, v
    return None


def _lp_sp_rp(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    u1 = u1 * u1
    if u1 >= 4.0:
        u = math.sqrt(u1 - 4.0)
        theta = math.atan2(2.0, u)
        t = _mod2pi(t1 + theta)
        v = _mod2pi(t - phi)
        if t >= -_ZERO and v >= -_ZERO:
            return t, u, v
    return None


def _lp_rm_l(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    u1, theta = _polar(xi, eta)
    if u1 <= 4.0:
        u = -2.0 * math.asin(max(-1.0, min(1.0, 0.25 * u1)))
        t = _mod2pi(theta + 0.5 * u + math.pi)
        v = _mod2pi(phi - t + u)
        if t >= -_ZERO and u <= _ZERO:
            return t, u, v
    return None


def _lp_rup_lum_rm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = 0.25 * (2.0 + math.hypot(xi, eta))
    if rho <= 1.0:
        u = math.acos(rho)
        t, v = _tau_omega(u, -u, xi, eta, phi)
        if t >= -_ZERO and v <= _ZERO:
            return t, u, v
    return None


def _lp_rum_lum_rp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = (20.0 - xi * xi - eta * eta) / 16.0
    if 0.0 <= rho <= 1.0:
        u = -math.acos(rho)
        if u >= -_HALF_PI:
            t, v = _tau_omega(u, u, xi, eta, phi)
            if t >= -_ZERO and v >= -_ZERO:
                return t, u, v
    return None


def _lp_rm_sm_lm(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    rho, theta = _polar(xi, eta)
    if rho >= 2.0:
        r = math.sqrt(rho * rho - 4.0)
        u = 2.0 - r
        t = _mod2pi(theta + math.atan2(r, -2.0))
        v = _mod2pi(phi - _HALF_PI - t)
        if t >= -_ZERO and u <= _ZERO and v <= _ZERO:
            return t, u, v
    return None


def _lp_rm_sm_rm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, theta = _polar(-eta, xi)
    if rho >= 2.0:
        t = theta
        u = 2.0 - rho
        v = _mod2pi(t + _HALF_PI - phi)
        if t >= -_ZERO and u <= _ZERO and v <= _ZERO:
            return t, u, v
    return None


def _lp_rm_sl_mrp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, _ = _polar(xi, eta)
    if rho >= 2.0:
        u = 4.0 - math.sqrt(rho * rho - 4.0)
        if u <= _ZERO:
            t = _mod2pi(math.atan2((4.0 - u) * xi - 2.0 * eta, -2.0 * xi + (u - 4.0) * eta))
            v = _mod2pi(t - phi)
            if t >= -_ZERO and v >= -_ZERO:
                return t, u, v
    return None


# Words are (kinds, signed normalized lengths).

def _csc(x, y, phi, out):
    for fn, word, mirror in ((_lp_sp_lp, "LSL", "RSR"), (_lp_sp_rp, "LSR", "RSL")):
        r = fn(x, y, phi)
        if r:
            out.append((word, r))
        r = fn(-x, y, -phi)
        if r:
            out.append((word, tuple(-q for q in r)))
        r = fn(x, -y, -phi)
        if r:
            out.append((mirror, r))
        r = fn(-x, -y, phi)
        if r:
            out.append((mirror, tuple(-q for q in r)))


def _ccc(x, y, phi, out):
    r = _lp_rm_l(x, y, phi)
    if r:
        out.append(("LRL", r))
    r = _lp_rm_l(-x, y, -phi)
    if r:
        out.append(("LRL", tuple(-q for q in r)))
    r = _lp_rm_l(x, -y, -phi)
    if r:
        out.append(("RLR", r))
    r = _lp_rm_l(-x, -y, phi)
    if r:
        out.append(("RLR", tuple(-q for q in r)))
    # backwards
    xb = x * math.cos(phi) + y * math.sin(phi)
    yb = x * math.sin(phi) - y * math.cos(phi)
    r = _lp_rm_l(xb, yb, phi)
    if r:
        out.append(("LRL", (r[2], r[1], r[0])))
    r = _lp_rm_l(-xb, yb, -phi)
    if r:
        out.append(("LRL", (-r[2], -r[1], -r[0])))
    r = _lp_rm_l(xb, -yb, -phi)
    if r:
        out.append(("RLR", (r[2], r[1], r[0])))
    r = _lp_rm_l(-xb, -yb, phi)
    if r:
        out.append(("RLR", (-r[2], -r[1], -r[0])))


def _cccc(x, y, phi, out):
    r = _lp_rup_lum_rm(x, y, phi)
    if r:
        out.append(("LRLR", (r[0], r[1], -r[1], r[2])))
    r = _lp_rup_lum_rm(-x, y, -phi)
    if r:
        out.append(("LRLR", (-r[0], -r[1], r[1], -r[2])))
    r = _lp_rup_lum_rm(x, -y, -phi)
    if r:
        out.append(("RLRL", (r[0], r[1], -r[1], r[2])))
    r = _lp_rup_lum_rm(-x, -y, phi)
    if r:
        out.append(("RLRL", (-r[0], -r[1], r[1], -r[2])))
    r = _lp_rum_lum_rp(x, y, phi)
    if r:
        out.append(("LRLR", (r[0], r[1], r[1], r[2])))
    r = _lp_rum_lum_rp(-x, y, -phi)
    if r:
        out.append(("LRLR", (-r[0], -r[1], -r[1], -r[2])))
    r = _lp_rum_lum_rp(x, -y, -phi)
    if r:
        out.append(("RLRL", (r[0], r[1], r[1], r[2])))
    r = _lp_rum_lum_rp(-x, -y, phi)
    if r:
        out.append(("RLRL", (-r[0], -r[1], -r[1], -r[2])))


def _ccsc(x, y, phi, out):
    h = _HALF_PI
    for fn, word, mirror in ((_lp_rm_sm_lm, "LRSL", "RLSR"), (_lp_rm_sm_rm, "LRSR", "RLSL")):
        r = fn(x, y, phi)
        if r:
            out.append((word, (r[0], -h, r[1], r[2])))
        r = fn(-x, y, -phi)
        if r:
            out.append((word, (-r[0], h, -r[1], -r[2])))
        r = fn(x, -y, -phi)
        if r:
            out.append((mirror, (r[0], -h, r[1], r[2])))
        r = fn(-x, -y, phi)
        if r:
            out.append((mirror, (-r[0], h, -r[1], -r[2])))
    # backwards
    xb = x * math.cos(phi) + y * math.sin(phi)
    yb = x * math.sin(phi) - y * math.cos(phi)
    for fn, word, mirror in ((_lp_rm_sm_lm, "LSRL", "RSLR"), (_lp_rm_sm_rm, "RSRL", "LSLR")):
        r = fn(xb, yb, phi)
        if r:
            out.append((word, (r[2], r[1], -h, r[0])))
        r = fn(-xb, yb, -phi)
        if r:
            out.append((word, (-r[2], -r[1], h, -r[0])))
        r = fn(xb, -yb, -phi)
        if r:
            out.append((mirror, (r[2], r[1], -h, r[0])))
        r = fn(-xb, -yb, phi)
        if r:
            out.append((mirror, (-r[2], -r[1], h, -r[0])))


def _ccscc(x, y, phi, out):
    h = _HALF_PI
    r = _lp_rm_sl_mrp(x, y, phi)
    if r:
        out.append(("LRSLR", (r[0], -h, r[1], -h, r[2])))
    r = _lp_rm_sl_mrp(-x, y, -phi)
    if r:
        out.append(("LRSLR", (-r[0], h, -r[1], h, -r[2])))
    r = _lp_rm_sl_mrp(x, -y, -phi)
    if r:
        out.append(("RLSRL", (r[0], -h, r[1], -h, r[2])))
    r = _lp_rm_sl_mrp(-x, -y, phi)
    if r:
        out.append(("RLSRL", (-r[0], h, -r[1], h, -r[2])))


def _words(x: float, y: float, phi: float) -> list[tuple[str, tuple[float, ...]]]:
    out: list = []
    _csc(x, y, phi, out)
    _ccc(x, y, phi, out)
    _cccc(x, y, phi, out)
    _ccsc(x, y, phi, out)
    _ccscc(x, y, phi, out)
    return out


def _to_path(word: str, lengths: tuple[float, ...], kappa: float) -> RSPath:
    segs = []
    for kind, q in zip(word, lengths):
        if abs(q) <= _ZERO:
            continue
        segs.append(RSSegment(kind, abs(q) / kappa, 1 if q > 0 else -1))
    return RSPath(tuple(segs), kappa)


def rs_candidates(start: Pose, goal: Pose, kappa: float) -> list[RSPath]:
    """All valid candidate words from ``start`` to ``goal``, shortest first.

    Equal lengths keep enumeration order (the sort is stable).
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    dx = goal.x - start.x
    dy = goal.y - start.y
    c, s = math.cos(start.theta), math.sin(start.theta)
    x = (c * dx + s * dy) * kappa
    y = (-s * dx + c * dy) * kappa
    phi = goal.theta - start.theta
    if math.hypot(x, y) < 1e-12 and abs(_mod2pi(phi)) < 1e-12:
        return [RSPath((), kappa)]
    paths = []
    for word, lengths in _words(x, y, phi):
        paths.append((sum(abs(q) for q in lengths), _to_path(word, lengths, kappa)))
    paths.sort(key=lambda item: item[0])
    return [p for _, p in paths]


def rs_shortest(start: Pose, goal: Pose, kappa: float) -> RSPath:
    return rs_candidates(start, goal, kappa)[0]


def rs_sample_array(path: RSPath, start: Pose, ds: float = DS_CHECK) -> tuple[np.ndarray, np.ndarray]:
    """Sampled poses (n, 3) and per-sample direction (n,), start included."""
    if ds <= 0:
        raise ValueError("ds must be positive")
    chunks = [np.array([start.as_tuple()])]
    dirs = [np.array([path.segments[0].direction if path.segments else 1])]
    x, y, th = start.as_tuple()
    for seg in path.segments:
        k = seg.curvature(path.kappa)
        pts = sample_segment(x, y, th, k, seg.direction * seg.length, ds)
        # chain from the analytic endpoint so sampling never accumulates error
        x, y, th = integrate_arc(x, y, th, k, seg.direction * seg.length)
        if len(pts):
            pts[-1] = (x, y, th)
        chunks.append(pts)
        dirs.append(np.full(len(pts), seg.direction))
    return np.concatenate(chunks), np.concatenate(dirs)


def rs_sample(path: RSPath, start: Pose, ds: float = DS_CHECK) -> list[tuple[Pose, int]]:
    poses, dirs = rs_sample_array(path, start, ds)
    return [(Pose(*p), int(d)) for p, d in zip(poses, dirs)]


def rs_path_collides(path: RSPath, start: Pose, spec: VehicleSpec, obstacles: ObstacleCloud,
                     ds: float = DS_CHECK) -> bool:
    """Collision test of the sampled path, stopping at the first colliding segment."""
    x, y, th = start.as_tuple()
    for seg in path.segments:
        k = seg.curvature(path.kappa)
        pts = sample_segment(x, y, th, k, seg.direction * seg.length, ds)
        x, y, th = integrate_arc(x, y, th, k, seg.direction * seg.length)
        if len(pts) and poses_in_collision(spec, pts, obstacles).any():
            return True
    return False


def rs_connect(
    start: Pose,
    goal: Pose,
    kappa: float,
    spec: VehicleSpec,
    obstacles: ObstacleCloud,
    ds: float = DS_CHECK,
) -> Optional[RSPath]:
    """Shortest collision-free candidate, or None when every candidate collides."""
    if poses_in_collision(spec, np.array([goal.as_tuple()]), obstacles)[0]:
        return None
    for path in rs_candidates(start, goal, kappa):
        if not rs_path_collides(path, start, spec, obstacles, ds):
            return path
    return None
