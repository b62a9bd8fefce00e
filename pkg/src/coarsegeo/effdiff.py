"""Coarse length, efficiency, and the differentiation scale search.

A path is efficient at a scale when its coarse length (the cheapest
partition sum at the grid scale) exceeds the endpoint distance by at
most a linear error in the grid.  The scale search walks the geometric
schedule r_m = r_{m-1} / eps, at each level choosing the decomposition
offset that maximizes the bad fraction, and stops at the first level
where almost every grid segment satisfies the reverse triangle
inequality.  A separate pass extracts, inside an efficient box mapped to
a hyperbolic target, a large sub-box whose image hugs one edge geodesic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .hypgraph import GeodesicSegment, MetricHandle

ASPECT_RATIO = 4.0  # frozen rho: every box side is >= size / rho


class ScaleBelowResolutionError(ValueError):
    pass


class QuasiLipschitzViolationError(RuntimeError):
    """The scale search ran out of levels, which is impossible for a map
    honestly satisfying its declared (K, C)."""


class NotEfficientError(RuntimeError):
    """A sub-box extraction failed on a map declared efficient."""


# ---------------------------------------------------------------------------
# Traces, boxes, grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathTrace:
    """A finite time-stamped point sequence in a metric handle, with
    declared quasi-Lipschitz constants."""

    times: tuple[float, ...]
    points: tuple
    handle: MetricHandle
    K: float
    C: float

    def __post_init__(self):
        if len(self.times) != len(self.points) or not self.times:
            raise ValueError("times and points must be equal-length and nonempty")
        ts = np.asarray(self.times, float)
        if not np.all(np.diff(ts) > 0):
            raise ValueError("times must be strictly increasing")
        for i in range(len(self.points) - 1):
            d = self.handle.distance(self.points[i], self.points[i + 1])
            if d > self.K * (self.times[i + 1] - self.times[i]) + self.C + 1e-9:
                raise ValueError(
                    f"jump {i} of size {d:.3f} violates declared (K={self.K}, C={self.C})"
                )

    @property
    def span(self) -> float:
        return self.times[-1] - self.times[0]

    def endpoint_distance(self) -> float:
        return self.handle.distance(self.points[0], self.points[-1])

    def subtrace(self, i: int, j: int) -> "PathTrace":
        return PathTrace(self.times[i:j + 1], self.points[i:j + 1],
                         self.handle, self.K, self.C)


@dataclass(frozen=True)
class Box:
    """A product of integer intervals in R^n (n <= 3 at desk scale)."""

    intervals: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not (1 <= len(self.intervals) <= 3):
            raise ValueError("boxes are supported in dimensions 1..3")
        for lo, hi in self.intervals:
            if hi <= lo:
                raise ValueError("empty interval")

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def sides(self) -> tuple[int, ...]:
        return tuple(hi - lo for lo, hi in self.intervals)

    @property
    def size(self) -> float:
        """The smallest R with diameter < R; sides must be >= R / rho."""
        diam = math.sqrt(sum(s * s for s in self.sides))
        size = math.floor(diam) + 1
        if min(self.sides) * ASPECT_RATIO < size:
            raise ValueError(f"box aspect exceeds the frozen ratio {ASPECT_RATIO}")
        return float(size)

    @property
    def center(self) -> np.ndarray:
        return np.array([(lo + hi) / 2 for lo, hi in self.intervals])

    def central_half(self) -> "Box":
        out = []
        for lo, hi in self.intervals:
            q = (hi - lo) // 4
            out.append((lo + q, hi - q))
        return Box(tuple(out))

    def contains(self, p: Sequence[float]) -> bool:
        return all(lo <= x <= hi for (lo, hi), x in zip(self.intervals, p))

    def corners(self) -> list[np.ndarray]:
        axes = [(lo, hi) for lo, hi in self.intervals]
        out = [[]]
        for lo, hi in axes:
            out = [c + [v] for c in out for v in (lo, hi)]
        return [np.array(c, float) for c in out]

    def to_json(self) -> list[list[int]]:
        return [list(iv) for iv in self.intervals]

    @classmethod
    def cube(cls, side: int, dim: int, origin: int = 0) -> "Box":
        return cls(tuple((origin, origin + side) for _ in range(dim)))


@dataclass(frozen=True)
class Grid:
    """An r-grid on a parameter interval: consecutive times differ by
    exactly r except possibly the two end segments."""

    start: float
    stop: float
    spacing: float
    anchor: float = 0.0

    def times(self) -> np.ndarray:
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        k0 = math.ceil((self.start - self.anchor) / self.spacing - 1e-9)
        k1 = math.floor((self.stop - self.anchor) / self.spacing + 1e-9)
        ts = [self.anchor + k * self.spacing for k in range(k0, k1 + 1)]
        if not ts or ts[0] > self.start + 1e-9:
            ts.insert(0, self.start)
        if ts[-1] < self.stop - 1e-9:
            ts.append(self.stop)
        return np.array(ts)


@dataclass(frozen=True)
class Line:
    """A parametrized straight segment inside a box."""

    origin: tuple[float, ...]
    direction: tuple[float, ...]
    length: float

    def point(self, t: float) -> np.ndarray:
        return np.asarray(self.origin) + t * np.asarray(self.direction)


@dataclass
class LineFamily:
    """Finitely many directions, each with a family of parallel lines.

    The direction set is density-dense on the unit sphere (verified at
    construction).  Desk-scale budgets cap how many directions and lines
    per direction are actually evaluated; axis directions always come
    first so every tile of a later subdivision is covered.
    """

    directions: list[tuple[float, ...]]
    lines: list[Line]
    density: float

    @staticmethod
    def directions_for(dim: int, density: float) -> list[tuple[float, ...]]:
        if dim == 1:
            return [(1.0,)]
        if dim == 2:
            count = max(4, math.ceil(math.pi / density))
            return [(math.cos(k * math.pi / count), math.sin(k * math.pi / count))
                    for k in range(count)]
        count = max(3, math.ceil(math.pi / density))
        dirs = []
        for i in range(count + 1):
            th = i * math.pi / count
            ring = max(1, math.ceil(2 * math.pi * math.sin(th) / density))
            for j in range(ring):
                ph = 2 * math.pi * j / ring
                dirs.append((math.sin(th) * math.cos(ph),
                             math.sin(th) * math.sin(ph),
                             math.cos(th)))
        return dirs

    @staticmethod
    def verify_density(dirs: Sequence[tuple[float, ...]], density: float) -> None:
        """Every unit vector must be within `density` of a member (up to
        sign, since lines are unoriented)."""
        dim = len(dirs[0])
        if dim == 1:
            return
        probes = LineFamily.directions_for(dim, density / 2.0)
        arr = np.asarray(dirs)
        for p in probes:
            gap = np.min(np.minimum(np.linalg.norm(arr - p, axis=1),
                                    np.linalg.norm(arr + p, axis=1)))
            if gap > density + 1e-9:
                raise ValueError(f"direction set is not {density}-dense (gap {gap:.4f})")

    @classmethod
    def build(cls, box: Box, density: float,
              max_directions: int | None = None,
              lines_per_direction: int = 24) -> "LineFamily":
        dim = box.dim
        dirs = cls.directions_for(dim, density)
        cls.verify_density(dirs, density)
        # axis directions first, then a deterministic spread of the rest
        axes = [tuple(1.0 if i == j else 0.0 for i in range(dim)) for j in range(dim)]
        chosen = list(axes)
        if max_directions is None or max_directions > len(chosen):
            extra = [d for d in dirs if d not in chosen]
            budget = (len(extra) if max_directions is None
                      else max(0, max_directions - len(chosen)))
            step = max(1, len(extra) // budget) if budget else 1
            chosen.extend(extra[::step][:budget])
        lines = []
        min_side = min(box.sides)
        for d in chosen:
            lines.extend(cls._cover(box, d, lines_per_direction, min_side))
        return cls(directions=chosen, lines=lines, density=density)

    @staticmethod
    def _cover(box: Box, direction: tuple[float, ...], per_direction: int,
               min_side: int) -> list[Line]:
        """Parallel lines through the box in one direction, clipped, with
        spacing comparable to the side over the per-direction budget;
        short clippings are discarded."""
        dim = box.dim
        d = np.asarray(direction)
        if dim == 1:
            lo, hi = box.intervals[0]
            return [Line((float(lo),), tuple(d), float(hi - lo))]
        # seed points on a lattice in the hyperplane through the center
        basis = [np.eye(dim)[i] for i in range(dim)]
        basis.sort(key=lambda e: abs(float(e @ d)))
        seeds = []
        spread = np.linspace(-0.5, 0.5, per_direction)
        if dim == 2:
            for s in spread:
                seeds.append(box.center + s * min_side * basis[0])
        else:
            side_count = max(2, int(math.sqrt(per_direction)))
            for s in np.linspace(-0.5, 0.5, side_count):
                for t in np.linspace(-0.5, 0.5, side_count):
                    seeds.append(box.center + min_side * (s * basis[0] + t * basis[1]))
        lines = []
        for seed in seeds:
            clip = _clip_line(box, seed, d)
            if clip is None:
                continue
            t0, t1 = clip
            if t1 - t0 >= min_side / 2:
                lines.append(Line(tuple(seed + t0 * d), tuple(d), float(t1 - t0)))
        return lines


def _clip_line(box: Box, p: np.ndarray, d: np.ndarray) -> tuple[float, float] | None:
    t0, t1 = -math.inf, math.inf
    for (lo, hi), pi, di in zip(box.intervals, p, d):
        if abs(di) < 1e-12:
            if not (lo <= pi <= hi):
                return None
            continue
        a, b = (lo - pi) / di, (hi - pi) / di
        t0, t1 = max(t0, min(a, b)), min(t1, max(a, b))
    if t0 >= t1:
        return None
    return t0, t1


@dataclass
class BoxMap:
    """A quasi-Lipschitz map from a box into a metric handle."""

    fn: Callable[[np.ndarray], Any]
    target: MetricHandle
    K: float
    C: float

    def trace(self, line: Line, spacing: float) -> PathTrace:
        ts = Grid(0.0, line.length, spacing).times()
        pts = tuple(self.fn(line.point(t)) for t in ts)
        return PathTrace(tuple(ts), pts, self.target, self.K, self.C)


# ---------------------------------------------------------------------------
# Coarse length and efficiency
# ---------------------------------------------------------------------------


def coarse_length(path: PathTrace, r: float) -> float:
    """Minimum partition sum at scale r, over partitions whose points are
    sample times of the trace (sampling density is the caller's duty).

    Computed exactly by shortest-path dynamic programming on the DAG of
    sample indices with time gaps at most r.
    """
    if r <= 0:
        raise ValueError("scale must be positive")
    ts = np.asarray(path.times)
    gaps = np.diff(ts)
    if len(gaps) and gaps.max() > r + 1e-9:
        raise ScaleBelowResolutionError("scale below resolution")
    n = len(ts)
    dist = path.handle.distance
    pts = path.points
    best = np.full(n, np.inf)
    best[0] = 0.0
    for j in range(1, n):
        i = j - 1
        while i >= 0 and ts[j] - ts[i] <= r + 1e-9:
            cand = best[i] + dist(pts[i], pts[j])
            if cand < best[j]:
                best[j] = cand
            i -= 1
    return float(best[-1])


def coarse_length_bruteforce(path: PathTrace, r: float) -> float:
    """Exhaustive minimum over all admissible sample-time partitions.
    Exponential; the oracle for traces with at most ~12 samples."""
    n = len(path.times)
    if n > 16:
        raise ValueError("brute force is for short traces")
    ts, pts, dist = path.times, path.points, path.handle.distance
    if any(ts[i + 1] - ts[i] > r + 1e-9 for i in range(n - 1)):
        raise ScaleBelowResolutionError("scale below resolution")
    best = math.inf
    mids = list(range(1, n - 1))
    for mask in range(1 << len(mids)):
        chosen = [0] + [mids[b] for b in range(len(mids)) if mask >> b & 1] + [n - 1]
        if any(ts[b] - ts[a] > r + 1e-9 for a, b in zip(chosen, chosen[1:])):
            continue
        total = sum(dist(pts[a], pts[b]) for a, b in zip(chosen, chosen[1:]))
        best = min(best, total)
    return best


def efficiency_test(path: PathTrace, R: float, eps: float, theta_eff: float) -> bool:
    """Reverse triangle inequality up to a linear error: the coarse
    length at scale eps*R must not exceed the endpoint distance by more
    than theta_eff * eps * R."""
    span = path.span
    if not (R / 8 <= span <= 8 * R):
        raise ValueError(f"trace span {span} is not comparable to the scale {R}")
    return coarse_length(path, eps * R) <= path.endpoint_distance() + theta_eff * eps * R


def subsegment_efficiency_closure(path: PathTrace, R: float, eps: float,
                                  theta_eff: float, kappa: float = 2.0,
                                  ) -> tuple[bool, tuple[int, int] | None]:
    """Every sample-aligned subsegment of an efficient path must itself
    pass at the enlarged constant kappa * theta_eff.  A failure witness
    signals an implementation bug, not a property of the input."""
    if not efficiency_test(path, R, eps, theta_eff):
        raise ValueError("input path is not efficient at the stated scale")
    n = len(path.times)
    r = eps * R
    allowance = kappa * theta_eff * r
    for i in range(n - 1):
        for j in range(i + 1, n):
            sub = path.subtrace(i, j)
            if coarse_length(sub, r) > sub.endpoint_distance() + allowance + 1e-9:
                return False, (i, j)
    return True, None


# ---------------------------------------------------------------------------
# The differentiation scale search
# ---------------------------------------------------------------------------


@dataclass
class SegmentVerdict:
    line_index: int
    t0: float
    t1: float
    partition_sum: float
    endpoint_distance: float
    efficient: bool


@dataclass
class DiffReport:
    """Outcome of a differentiation run."""

    scale: float
    grid_spacing: float
    level: int
    bad_fraction: float
    segment_verdicts: list[SegmentVerdict]
    box_verdicts: list[tuple[Box, bool]] = field(default_factory=list)
    fraction_efficient: float = 1.0
    untested_boxes: int = 0
    params: dict = field(default_factory=dict)
    lines: list[Line] = field(default_factory=list)  # the lines actually used

    def efficient_boxes(self) -> list[Box]:
        return [b for b, ok in self.box_verdicts if ok]

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "scale": self.scale,
            "grid_spacing": self.grid_spacing,
            "level": self.level,
            "bad_fraction": self.bad_fraction,
            "fraction_efficient": self.fraction_efficient,
            "untested_boxes": self.untested_boxes,
            "segments": [
                {"line": s.line_index, "t0": s.t0, "t1": s.t1,
                 "sum": s.partition_sum, "dist": s.endpoint_distance,
                 "efficient": s.efficient}
                for s in self.segment_verdicts
            ],
            "boxes": [{"box": b.to_json(), "efficient": ok}
                      for b, ok in self.box_verdicts],
            "params": self.params,
        }


def differentiate_lines(fmap: BoxMap, box: Box, eps: float, theta: float,
                        r0: float, lines: Sequence[Line] | None = None,
                        bdelta_mult: float = 2.0, kappa_m: float = 4.0,
                        ) -> DiffReport:
    """Walk the schedule r_m = r_{m-1} / eps until at most a theta
    fraction of decomposition segments fails the grid-sum inequality
    partition_sum <= bdelta_mult * (endpoint_distance + eps * scale).

    At every level each line exhaustively tries all grid offsets and
    keeps the one maximizing its bad fraction, which makes a success
    level a certificate rather than a lucky draw.
    """
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    r0 = max(r0, fmap.C, 1e-9)
    if lines is None:
        lines = LineFamily.build(box, density=eps).lines
    lines = [ln for ln in lines if ln.length >= r0 * 2]
    if not lines:
        raise ValueError("no usable lines: box too small for the base grid")
    stride = max(2, round(1.0 / eps))
    max_level = math.ceil(kappa_m * fmap.K / (eps * theta)) if theta > 0 else 10 ** 9

    cache: list[dict[tuple[int, int], float]] = [dict() for _ in lines]
    base_ts: list[np.ndarray] = []
    images: list[list[Any]] = []
    grids: list[list[int]] = []
    for ln in lines:
        ts = np.arange(0.0, ln.length + 1e-9, r0)
        base_ts.append(ts)
        images.append([fmap.fn(ln.point(t)) for t in ts])
        grids.append(list(range(len(ts))))

    def dist(li: int, a: int, b: int) -> float:
        key = (a, b) if a < b else (b, a)
        got = cache[li].get(key)
        if got is None:
            got = fmap.target.distance(images[li][a], images[li][b])
            cache[li][key] = got
        return got

    level = 0
    r_prev = r0
    while True:
        level += 1
        r_m = r_prev * stride
        if r_m > max(ln.length for ln in lines):
            raise QuasiLipschitzViolationError(
                f"no admissible scale before the schedule left the box at level {level}; "
                f"either the box is below the required size or (K, C) are wrong"
            )
        if level > max_level:
            raise QuasiLipschitzViolationError(
                f"exceeded the level budget {max_level}; declared (K, C) look wrong"
            )
        verdicts: list[SegmentVerdict] = []
        total = bad_total = 0
        new_grids: list[list[int]] = []
        for li, ln in enumerate(lines):
            cur = grids[li]
            jumps = [dist(li, cur[k], cur[k + 1]) for k in range(len(cur) - 1)]
            prefix = np.concatenate([[0.0], np.cumsum(jumps)])
            best = None  # (bad fraction, bad count, grid points, verdicts)
            for off in range(min(stride, max(1, len(cur) - 1))):
                positions = list(range(off, len(cur), stride))
                if len(positions) < 2:
                    continue
                segs = []
                bad = 0
                for ia, ib in zip(positions, positions[1:]):
                    a, b = cur[ia], cur[ib]
                    s = float(prefix[ib] - prefix[ia])
                    dend = dist(li, a, b)
                    ok = s <= bdelta_mult * (dend + eps * r_m) + 1e-9
                    bad += not ok
                    segs.append(SegmentVerdict(li, base_ts[li][a], base_ts[li][b],
                                               s, dend, ok))
                frac = bad / len(segs)
                if best is None or frac > best[0]:
                    best = (frac, bad, [cur[i] for i in positions], segs)
            if best is None:
                new_grids.append(cur)
                continue
            _, bad, pts, segs = best
            new_grids.append(pts)
            verdicts.extend(segs)
            total += len(segs)
            bad_total += bad
        if total == 0:
            raise QuasiLipschitzViolationError("schedule exhausted every line")
        frac = bad_total / total
        if frac <= theta:
            return DiffReport(
                scale=r_m, grid_spacing=r_prev, level=level, bad_fraction=frac,
                segment_verdicts=verdicts,
                params={"eps": eps, "theta": theta, "r0": r0, "stride": stride,
                        "bdelta_mult": bdelta_mult, "n_lines": len(lines)},
                lines=list(lines),
            )
        grids = new_grids
        r_prev = r_m


def differentiate_box(fmap: BoxMap, box: Box, eps0: float, theta0: float,
                      r0: float, kappa_theta: float = 2.0,
                      max_directions: int | None = 8,
                      lines_per_direction: int = 24,
                      bdelta_mult: float = 2.0) -> DiffReport:
    """Find a scale at which most sub-boxes are efficient.

    Runs the line search at the derived parameters (eps = eps0^2, theta
    from theta0 * eps^(n+2)), then subdivides the central half of the
    box at the returned scale and marks a tile efficient when every
    tested segment meeting it passed.  Because tiles are judged directly
    from segment verdicts rather than through a counting argument, the
    line-phase tolerance is floored at theta0 / 4; the derived value is
    a union-bound device that desk-scale boxes cannot afford.
    """
    n = box.dim
    eps = eps0 ** 2
    theta = max(theta0 * eps ** (n + 2) / kappa_theta, theta0 / 4.0)
    base = max(r0, fmap.C, 1e-9)
    stride = max(2, round(1.0 / eps))
    required = 2.0 * base * stride
    if box.size < required:
        raise ValueError(
            f"box of size {box.size:g} is below the required size {required:g} "
            f"for eps0={eps0}, r0={r0} (engine-reported minimum)"
        )
    family = LineFamily.build(box, density=eps0 ** 2,
                              max_directions=max_directions,
                              lines_per_direction=lines_per_direction)
    report = differentiate_lines(fmap, box, eps, theta, base,
                                 lines=family.lines, bdelta_mult=bdelta_mult)
    R = report.scale
    central = box.central_half()
    side = max(1, round(R / math.sqrt(n)))
    tiles = _tile(central, side)
    # map segments back to the lines that carried them
    seg_boxes: dict[int, list[bool]] = {i: [] for i in range(len(tiles))}
    for sv in report.segment_verdicts:
        ln = report.lines[sv.line_index]
        for ti, tile in enumerate(tiles):
            if _segment_meets_box(tile, ln, sv.t0, sv.t1):
                seg_boxes[ti].append(sv.efficient)
    box_verdicts: list[tuple[Box, bool]] = []
    untested = 0
    good = tested = 0
    for ti, tile in enumerate(tiles):
        hits = seg_boxes[ti]
        if not hits:
            untested += 1
            continue
        ok = all(hits)
        tested += 1
        good += ok
        box_verdicts.append((tile, ok))
    report.box_verdicts = box_verdicts
    report.fraction_efficient = good / tested if tested else 0.0
    report.untested_boxes = untested
    report.params.update({"eps0": eps0, "theta0": theta0, "tile_side": side,
                          "kappa_theta": kappa_theta})
    return report


def _tile(box: Box, side: int) -> list[Box]:
    ranges = []
    for lo, hi in box.intervals:
        starts = list(range(lo, hi - side + 1, side)) or [lo]
        ranges.append([(s, min(s + side, hi)) for s in starts])
    tiles = [[]]
    for axis in ranges:
        tiles = [t + [iv] for t in tiles for iv in axis]
    return [Box(tuple(t)) for t in tiles]


def _segment_meets_box(box: Box, line: Line, t0: float, t1: float) -> bool:
    clip = _clip_line(box, np.asarray(line.origin, float), np.asarray(line.direction, float))
    if clip is None:
        return False
    a, b = clip
    return max(a, t0) <= min(b, t1) + 1e-9


# ---------------------------------------------------------------------------
# Efficient maps into hyperbolic targets
# ---------------------------------------------------------------------------


def hyperbolic_subbox(fmap: BoxMap, box: Box, eps: float,
                      c_near: float = 8.0, sigma0: float = 0.125,
                      grid_max: int = 17) -> tuple[Box, GeodesicSegment]:
    """Inside a box mapped efficiently to a hyperbolic target, find a
    sub-box of definite relative size whose image stays near a single
    box-edge geodesic.

    Grid points are labeled by their nearest edge geodesic; the largest
    axis-aligned grid sub-box sharing one label within c_near * eps * R
    wins.  Failure means the efficiency claim was false.
    """
    target = fmap.target
    R = box.size
    tol = c_near * eps * R
    n = box.dim
    # the n * 2^(n-1) edge geodesics of the box image
    edges: list[GeodesicSegment] = []
    for axis in range(n):
        others = [i for i in range(n) if i != axis]
        combos = [[]]
        for i in others:
            combos = [c + [(i, v)] for c in combos for v in box.intervals[i]]
        for combo in combos:
            p0 = np.array(box.center, float)
            p1 = np.array(box.center, float)
            p0[axis], p1[axis] = box.intervals[axis]
            for i, v in combo:
                p0[i] = p1[i] = v
            edges.append(target.geodesic(fmap.fn(p0), fmap.fn(p1)))
    axes_pts = []
    for lo, hi in box.intervals:
        count = int(min(grid_max, max(2, (hi - lo) / max(eps * R, 1e-9) + 1)))
        axes_pts.append(np.linspace(lo, hi, count))
    shape = tuple(len(a) for a in axes_pts)
    labels = np.full(shape, -1, dtype=int)
    near = np.zeros(shape, dtype=bool)
    for idx in np.ndindex(shape):
        p = np.array([axes_pts[i][idx[i]] for i in range(n)])
        img = fmap.fn(p)
        dists = [min(target.distance(img, v) for v in e.vertices) for e in edges]
        best = int(np.argmin(dists))
        labels[idx] = best
        near[idx] = dists[best] <= tol
    best_box = None
    best_cells = -1
    best_label = -1
    for lab in range(len(edges)):
        mask = near & (labels == lab)
        found = _largest_true_box(mask)
        if found is not None:
            cells = found[1]
            if cells > best_cells:
                best_cells = cells
                best_label = lab
                best_box = found[0]
    if best_box is None:
        raise NotEfficientError("not efficient as declared")
    intervals = tuple(
        (int(round(axes_pts[i][best_box[i][0]])), int(round(axes_pts[i][best_box[i][1]])))
        for i in range(n)
    )
    sub = Box(intervals)
    if min(sub.sides) < sigma0 * min(box.sides):
        raise NotEfficientError("not efficient as declared")
    return sub, edges[best_label]


def _largest_true_box(mask: np.ndarray) -> tuple[list[tuple[int, int]], int] | None:
    """Largest axis-aligned all-true index sub-box (min-side maximized,
    then cell count); brute force over index ranges, fine at grid scale."""
    shape = mask.shape
    best = None
    best_score = (-1, -1)
    ranges = [[(a, b) for a in range(s) for b in range(a + 1, s)] for s in shape]
    idx_rects = [[]]
    for r in ranges:
        idx_rects = [c + [ab] for c in idx_rects for ab in r]
    for rect in idx_rects:
        sl = tuple(slice(a, b + 1) for a, b in rect)
        if not np.all(mask[sl]):
            continue
        sides = [b - a for a, b in rect]
        score = (min(sides), int(np.prod([s + 1 for s in sides])))
        if score > best_score:
            best_score = score
            best = (rect, score[1])
    return best
