"""Independent reference implementations used only by the tests."""
from __future__ import annotations

import heapq
import itertools
import math

import numpy as np

PI = math.pi
TURN = {"L": 1.0, "R": -1.0, "S": 0.0}


# -- Reeds-Shepp brute force ------------------------------------------------
#
# Each template is a letter word plus a recipe mapping two grid variables
# (p, q) to the segment lengths that precede the final arc. The final arc
# is fixed by the heading equation. Signs of the fixed quarter turns and of
# the tied CCCC arcs are enumerated, so the template set is a superset of
# the classical families.

def _templates():
    out = []
    for w in ("LSL", "LSR", "RSL", "RSR"):
        out.append((w, lambda p, q: [p, q], ("arc", "straight")))
    for w in ("LRL", "RLR"):
        out.append((w, lambda p, q: [p, q], ("arc", "arc")))
    for w in ("LRLR", "RLRL"):
        out.append((w, lambda p, q: [p, q, q], ("arc", "half")))
        out.append((w, lambda p, q: [p, q, -q], ("arc", "half")))
    for w in ("LRSL", "RLSR", "LRSR", "RLSL"):
        for s in (1.0, -1.0):
            out.append((w, lambda p, q, s=s: [p, s * PI / 2, q], ("arc", "straight")))
    for w in ("LSRL", "RSLR", "RSRL", "LSLR"):
        for s in (1.0, -1.0):
            out.append((w, lambda p, q, s=s: [p, q, s * PI / 2], ("arc", "straight")))
    for w in ("LRSLR", "RLSRL"):
        for s1, s2 in itertools.product((1.0, -1.0), repeat=2):
            out.append((w, lambda p, q, s1=s1, s2=s2: [p, s1 * PI / 2, q, s2 * PI / 2], ("arc", "straight")))
    return out


TEMPLATES = _templates()


def _wrap(a):
    return np.remainder(a + PI, 2 * PI) - PI


def _integrate(word, lengths, phi):
    """Integrate unit-radius word; final arc chosen to satisfy the heading.

    ``lengths`` are arrays (broadcastable). Returns (x, y, lengths_with_last).
    """
    th = np.zeros_like(np.asarray(lengths[0], dtype=float))
    x = np.zeros_like(th)
    y = np.zeros_like(th)
    sc = (np.zeros_like(th), np.ones_like(th))  # sin, cos of the current heading
    for kind, s in zip(word[:-1], lengths):
        s = np.asarray(s, dtype=float)
        x, y, th, sc = _step(kind, s, x, y, th, sc)
    last_turn = TURN[word[-1]]
    v = _wrap((phi - th) * last_turn)
    x, y, th, _ = _step(word[-1], v, x, y, th, sc)
    return x, y, list(lengths) + [v]


def _step(kind, s, x, y, th, sc):
    sin0, cos0 = sc
    if kind == "S":
        return x + s * cos0, y + s * sin0, th, sc
    k = TURN[kind]
    th2 = th + k * s
    sin2, cos2 = np.sin(th2), np.cos(th2)
    return x + (sin2 - sin0) / k, y - (cos2 - cos0) / k, th2, (sin2, cos2)


def rs_bruteforce_length(start, goal, kappa, n_grid=128):
    """Shortest bounded-curvature path length by dense parameter sampling.

    Independent of the analytic word formulas: each word is solved by
    sampling its free lengths on a grid and Newton-refining near-roots.
    """
    dx, dy = goal[0] - start[0], goal[1] - start[1]
    c, s = math.cos(start[2]), math.sin(start[2])
    gx = (c * dx + s * dy) * kappa
    gy = (-s * dx + c * dy) * kappa
    phi = goal[2] - start[2]
    if math.hypot(gx, gy) < 1e-12 and abs(math.remainder(phi, 2 * PI)) < 1e-12:
        return 0.0
    dist = math.hypot(gx, gy)
    smax = dist + 2 * PI + 4.0
    ranges = {"arc": (-PI, PI), "straight": (-smax, smax), "half": (-PI / 2, PI / 2)}
    best = math.inf
    for word, recipe, kinds in TEMPLATES:
        lo_p, hi_p = ranges[kinds[0]]
        lo_q, hi_q = ranges[kinds[1]]
        P, Q = np.meshgrid(np.linspace(lo_p, hi_p, n_grid), np.linspace(lo_q, hi_q, n_grid), indexing="ij")
        x, y, _ = _integrate(word, recipe(P, Q), phi)
        err = np.hypot(x - gx, y - gy)
        # local minima of the residual on the grid
        pad = np.pad(err, 1, constant_values=np.inf)
        neigh = np.min(
            [pad[1 + i : 1 + i + n_grid, 1 + j : 1 + j + n_grid] for i in (-1, 0, 1) for j in (-1, 0, 1) if i or j],
            axis=0,
        )
        cell = max((hi_p - lo_p), (hi_q - lo_q)) / (n_grid - 1)
        cand = np.argwhere((err <= neigh) & (err < 3.0 * cell))
        for i, j in cand:
            sol = _newton(word, recipe, phi, gx, gy, P[i, j], Q[i, j])
            if sol is None:
                continue
            p, q = sol
            if not (lo_p - 1e-9 <= p <= hi_p + 1e-9 and lo_q - 1e-9 <= q <= hi_q + 1e-9):
                continue
            lens = list(recipe(p, q))
            _, _, th = _integrate_scalar(word[:-1] + "S", lens + [0.0], phi)
            lens.append(math.remainder((phi - th) * TURN[word[-1]], 2 * PI))
            total = sum(abs(v) for v in lens)
            best = min(best, total)
    return best / kappa


def _integrate_scalar(word, lengths, phi):
    x = y = th = 0.0
    for kind, s in zip(word[:-1], lengths):
        x, y, th = _step_scalar(kind, s, x, y, th)
    v = math.remainder((phi - th) * TURN[word[-1]], 2 * PI)
    return _step_scalar(word[-1], v, x, y, th)


def _step_scalar(kind, s, x, y, th):
    if kind == "S":
        return x + s * math.cos(th), y + s * math.sin(th), th
    k = TURN[kind]
    th2 = th + k * s
    return x + (math.sin(th2) - math.sin(th)) / k, y - (math.cos(th2) - math.cos(th)) / k, th2


def _newton(word, recipe, phi, gx, gy, p, q, iters=40):
    def f(p, q):
        x, y, _ = _integrate_scalar(word, recipe(p, q), phi)
        return x - gx, y - gy

    h = 1e-7
    p, q = float(p), float(q)
    for _ in range(iters):
        r0, r1 = f(p, q)
        if math.hypot(r0, r1) < 1e-12:
            return p, q
        a0, a1 = f(p + h, q)
        b0, b1 = f(p, q + h)
        j00, j10 = (a0 - r0) / h, (a1 - r1) / h
        j01, j11 = (b0 - r0) / h, (b1 - r1) / h
        det = j00 * j11 - j01 * j10
        if det == 0.0 or not math.isfinite(det):
            return None
        dp = (-r0 * j11 + r1 * j01) / det
        dq = (-j00 * r1 + j10 * r0) / det
        # damp large jumps so the iterate stays in the sampled basin
        norm = math.hypot(dp, dq)
        if norm > 0.5:
            dp, dq = dp * 0.5 / norm, dq * 0.5 / norm
        p, q = p + dp, q + dq
    return (p, q) if math.hypot(*f(p, q)) < 1e-9 else None


# -- kinematic replay -------------------------------------------------------

def rk4_replay(start, segments, wheelbase, h=0.01):
    """Integrate the bicycle model numerically over (steer, gear, length) segments.

    Returns the pose after each segment.
    """
    x, y, th = start
    out = []
    for steer, gear, length in segments:
        n = max(1, math.ceil(length / h))
        ds = length / n
        k = math.tan(steer) / wheelbase
        v = float(gear)
        for _ in range(n):
            # headings at the RK4 stages; the position update only needs cos/sin of them
            t1 = th
            t2 = th + 0.5 * ds * v * k
            t4 = th + ds * v * k
            cx = (math.cos(t1) + 4.0 * math.cos(t2) + math.cos(t4)) / 6.0
            cy = (math.sin(t1) + 4.0 * math.sin(t2) + math.sin(t4)) / 6.0
            x, y, th = x + ds * v * cx, y + ds * v * cy, t4
        out.append((x, y, th))
    return out


# -- grid shortest paths ----------------------------------------------------

def grid_shortest(free, goal, res):
    """Plain Bellman-Ford style relaxation over an 8-connected boolean grid."""
    w, h = free.shape
    dist = np.full((w, h), np.inf)
    dist[goal] = 0.0
    changed = True
    moves = [(di, dj, res * math.hypot(di, dj)) for di in (-1, 0, 1) for dj in (-1, 0, 1) if di or dj]
    while changed:
        changed = False
        for i in range(w):
            for j in range(h):
                if not free[i, j] or dist[i, j] == np.inf:
                    continue
                for di, dj, c in moves:
                    a, b = i + di, j + dj
                    if 0 <= a < w and 0 <= b < h and free[a, b] and dist[i, j] + c < dist[a, b] - 1e-12:
                        dist[a, b] = dist[i, j] + c
                        changed = True
    return dist


def knn_linear_scan(features, scales, query):
    """Index of the nearest row with wrapped heading, first index on ties."""
    best_i, best_d = -1, math.inf
    for i, row in enumerate(features):
        d = 0.0
        for j in range(6):
            diff = query[j] - row[j]
            if j == 2:
                diff = math.remainder(diff, 2 * PI)
            d += (scales[j] * diff) ** 2
        if d < best_d:
            best_i, best_d = i, d
    return best_i


def lattice_dijkstra(start_state, successors, is_goal):
    """Uniform-cost search over hashable states.

    ``successors(state)`` yields (next_state, cost). Returns the optimal cost
    to any goal state, or inf.
    """
    counter = itertools.count()
    best = {start_state: 0.0}
    heap = [(0.0, next(counter), start_state)]
    while heap:
        g, _, st = heapq.heappop(heap)
        if g > best.get(st, math.inf):
            continue
        if is_goal(st):
            return g
        for nxt, c in successors(st):
            ng = g + c
            if ng < best.get(nxt, math.inf):
                best[nxt] = ng
                heapq.heappush(heap, (ng, next(counter), nxt))
    return math.inf
