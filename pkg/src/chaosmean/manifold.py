"""Adaptive tracing of the evolved momentum-line manifold.

The initial manifold is the horizontal line p = m0 parametrized by
theta0 in [0, 2pi); its image under k kicks is a curve on the cylinder
or torus.  The tracer walks theta0 with a predictor-corrector step:

  1. step size dtheta0 = L / |u|, u the evolved tangent of the line,
  2. linear prediction x_prev + dtheta0 * u,
  3. accept when |prediction - true image| < epsilon * L_max in the
     wrapped metric, otherwise halve L and retry from step 1.

L restarts from L_max at every accepted point, so consecutive output
points are never more than (1 + epsilon) * L_max apart while flat
stretches are covered at full stride.  Only the sections crossing the
detector's cutoff disk are retained, each with one out-of-disk
bracketing point per end; contiguous in-disk runs become filaments,
numbered in order of their first theta0.  A section crossing the
theta0 = 0 seam is stitched into a single filament whose leading theta0
values are lifted below zero.

Every retained point carries the full trajectory bookkeeping (monodromy,
actions, caustic counters), stored column-wise; `Filament` exposes both
the raw array and `ManifoldPoint` views.  A dense uniform-theta0 sampler
(`dense_disk_runs`) provides an independent filament count used to audit
the adaptive walk.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .maps import (
    RUN_NCOL,
    MapKind,
    MapParams,
    PhasePoint,
    TangentFrame,
    TrajectoryRecord,
    _run_harper_into,
    _run_rotor_into,
    wrap_angle,
    wrap_pm_pi,
)
from .wigner import Detector

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

__all__ = [
    "TraceConfig",
    "ManifoldPoint",
    "Filament",
    "trace_manifold",
    "split_fingers",
    "split_all_fingers",
    "resample_filament",
    "dense_disk_runs",
    "save_filaments_csv",
    "COLUMNS",
]

# Column layout of Filament.data / the tracer buffer.
COLUMNS = (
    "theta0",
    "p",
    "theta",
    "theta_unwrapped",
    "p_unwrapped",
    "geom_action",
    "hk_action",
    "mu_unsigned",
    "mu_signed",
    "m00",
    "m01",
    "m10",
    "m11",
    "det",
    "in_disk",
    "step",
    "mu_phase",
)
NCOL = len(COLUMNS)
C_THETA0 = 0
C_P = 1
C_THETA = 2
C_THETA_LIFT = 3
C_P_LIFT = 4
C_GEOM = 5
C_HK = 6
C_MU_U = 7
C_MU_S = 8
C_M00 = 9
C_M01 = 10
C_M10 = 11
C_M11 = 12
C_DET = 13
C_IN = 14
C_STEP = 15
C_MU_PHASE = 16

_OK = 0
_OVERFLOW = 1
_MAX_POINTS = 2
_UNDERFLOW = 3


@dataclass(frozen=True)
class TraceConfig:
    """Step-size policy for the adaptive walk.

    ``L_max`` is the target spacing along the traced curve (defaults to
    detector.sigma / 10 when left unset), ``epsilon`` the accepted
    fraction of L_max for the linearization error, ``max_points`` a cap
    on the total number of trajectory evaluations including retries.
    """

    L_max: float | None = None
    epsilon: float = 0.05
    max_points: int = 10**8

    def __post_init__(self):
        if self.L_max is not None and not self.L_max > 0.0:
            raise ValueError(f"L_max must be positive, got {self.L_max}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_points < 1:
            raise ValueError("max_points must be >= 1")

    def resolve_spacing(self, det: Detector) -> float:
        """Concrete L_max for a detector; enforces L_max < cutoff / 4."""
        L = self.L_max if self.L_max is not None else det.sigma / 10.0
        if not L < det.radius / 4.0:
            raise ValueError(
                f"L_max = {L} must stay below a quarter of the cutoff radius "
                f"{det.radius}"
            )
        return float(L)


@dataclass(frozen=True)
class ManifoldPoint:
    """One traced point: initial angle, final point, full bookkeeping."""

    theta0: float
    x: PhasePoint
    record: TrajectoryRecord


@dataclass(frozen=True)
class Filament:
    """A contiguous section of the traced manifold inside the detector disk.

    ``data`` holds one row per retained point in walk order (columns per
    ``COLUMNS``), including the out-of-disk bracketing rows marked by a
    zero in the ``in_disk`` column.  ``theta0`` is strictly increasing;
    for a filament stitched across the walk seam the leading values are
    lifted below zero.
    """

    id: int
    data: np.ndarray
    has_entry: bool
    has_exit: bool
    m0: float
    k: int
    params: MapParams
    det: Detector
    split_piece: bool = False

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != NCOL:
            raise ValueError(f"data must be (n, {NCOL}), got {self.data.shape}")
        if len(self.data) < 2:
            raise ValueError("a filament needs at least two points")
        th0 = self.data[:, C_THETA0]
        if not np.all(np.diff(th0) > 0):
            raise ValueError("theta0 must be strictly increasing along a filament")

    def __len__(self) -> int:
        return len(self.data)

    @property
    def theta0(self) -> np.ndarray:
        return self.data[:, C_THETA0]

    @property
    def xy(self) -> np.ndarray:
        """(n, 2) array of final (p, theta) points."""
        return self.data[:, (C_P, C_THETA)]

    @property
    def in_disk_mask(self) -> np.ndarray:
        return self.data[:, C_IN] > 0.5

    def segment_lengths(self) -> np.ndarray:
        """Wrapped-metric length of each chord of the polyline."""
        dp = np.diff(self.data[:, C_P])
        dth = wrap_pm_pi(np.diff(self.data[:, C_THETA]))
        if self.params.kind is MapKind.KICKED_HARPER:
            dp = wrap_pm_pi(dp)
        return np.hypot(dp, dth)

    def arclength(self) -> np.ndarray:
        """Cumulative wrapped-metric arclength, starting at zero."""
        out = np.empty(len(self.data))
        out[0] = 0.0
        np.cumsum(self.segment_lengths(), out=out[1:])
        return out

    def point(self, i: int) -> ManifoldPoint:
        r = self.data[int(i)]
        x = PhasePoint(float(r[C_P]), float(r[C_THETA]))
        wrap = wrap_pm_pi if self.params.kind is MapKind.KICKED_HARPER else wrap_angle
        matrix = np.array(
            [[r[C_M00], r[C_M01]], [r[C_M10], r[C_M11]]]
        )
        frame = TangentFrame(
            matrix=matrix,
            tangent=np.array([r[C_M01], r[C_M11]]),
            det=float(r[C_DET]),
        )
        record = TrajectoryRecord(
            x0=PhasePoint(self.m0, float(wrap(r[C_THETA0]))),
            final=x,
            k=self.k,
            frame=frame,
            theta_unwrapped=float(r[C_THETA_LIFT]),
            p_unwrapped=float(r[C_P_LIFT]),
            geom_action=float(r[C_GEOM]),
            hk_action=float(r[C_HK]),
            mu_unsigned=int(round(r[C_MU_U])),
            mu_signed=int(round(r[C_MU_S])),
            mu_phase=int(round(r[C_MU_PHASE])),
        )
        return ManifoldPoint(theta0=float(r[C_THETA0]), x=x, record=record)

    @property
    def points(self) -> list[ManifoldPoint]:
        """In-disk points only; brackets are reachable via entry/exit."""
        return [self.point(i) for i in np.flatnonzero(self.in_disk_mask)]

    @property
    def entry(self) -> ManifoldPoint | None:
        return self.point(0) if self.has_entry else None

    @property
    def exit(self) -> ManifoldPoint | None:
        return self.point(len(self.data) - 1) if self.has_exit else None


# ---------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _wrap_pm(x):
    if x < -np.pi:
        return x + TWO_PI
    if x >= np.pi:
        return x - TWO_PI
    return x


@njit(cache=True)
def _dist2(p, th, mc, thc, wrap_p):
    dp = p - mc
    if wrap_p:
        dp = _wrap_pm(dp)
    dth = _wrap_pm(th - thc)
    return dp * dp + dth * dth


@njit(cache=True)
def _store(buf, row, th0, res, in_flag, step):
    buf[row, C_THETA0] = th0
    buf[row, C_P] = res[0]
    buf[row, C_THETA] = res[1]
    buf[row, C_THETA_LIFT] = res[2]
    buf[row, C_P_LIFT] = res[3]
    buf[row, C_GEOM] = res[4]
    buf[row, C_HK] = res[5]
    buf[row, C_MU_U] = res[6]
    buf[row, C_MU_S] = res[7]
    buf[row, C_M00] = res[9]
    buf[row, C_M01] = res[10]
    buf[row, C_M10] = res[11]
    buf[row, C_M11] = res[12]
    buf[row, C_DET] = res[13]
    buf[row, C_IN] = in_flag
    buf[row, C_STEP] = step
    buf[row, C_MU_PHASE] = res[16]


@njit(cache=True)
def _trace_kernel(
    p0, alpha, k, is_rotor, mc, thc, radius, L_max, eps, max_evals, buf
):
    cap = buf.shape[0]
    r2 = radius * radius
    wrap_p = not is_rotor
    prev = np.empty(RUN_NCOL)
    cand = np.empty(RUN_NCOL)
    if is_rotor:
        _run_rotor_into(prev, p0, 0.0, alpha, k)
    else:
        _run_harper_into(prev, p0, 0.0, alpha, k)
    evals = 1
    th0_prev = 0.0
    step = 0
    in_prev = _dist2(prev[0], prev[1], mc, thc, wrap_p) <= r2
    rows = 0
    if in_prev:
        _store(buf, rows, 0.0, prev, 1.0, 0.0)
        rows += 1
    prev_stored = in_prev
    while th0_prev < TWO_PI:
        L = L_max
        while True:
            up = prev[10]
            ut = prev[12]
            dth0 = L / math.hypot(up, ut)
            if th0_prev + dth0 >= TWO_PI:
                dth0 = TWO_PI - th0_prev
                th0_new = TWO_PI
            else:
                th0_new = th0_prev + dth0
                if th0_new == th0_prev:  # dth0 below one ulp; cannot advance
                    return _UNDERFLOW, rows, evals, th0_prev
            if is_rotor:
                _run_rotor_into(cand, p0, th0_new, alpha, k)
            else:
                _run_harper_into(cand, p0, th0_new, alpha, k)
            evals += 1
            if evals > max_evals:
                return _MAX_POINTS, rows, evals, th0_prev
            ep = prev[0] + dth0 * up - cand[0]
            if wrap_p:
                ep = _wrap_pm(ep)
            et = _wrap_pm(prev[1] + dth0 * ut - cand[1])
            if math.hypot(ep, et) < eps * L_max:
                break
            L *= 0.5
            if L < 1e-14:
                return _UNDERFLOW, rows, evals, th0_prev
        step += 1
        in_new = _dist2(cand[0], cand[1], mc, thc, wrap_p) <= r2
        if in_new:
            if not prev_stored:
                if rows >= cap:
                    return _OVERFLOW, rows, evals, th0_prev
                _store(buf, rows, th0_prev, prev, 0.0, step - 1.0)
                rows += 1
            if rows >= cap:
                return _OVERFLOW, rows, evals, th0_prev
            _store(buf, rows, th0_new, cand, 1.0, float(step))
            rows += 1
            prev_stored = True
        elif in_prev:
            if rows >= cap:
                return _OVERFLOW, rows, evals, th0_prev
            _store(buf, rows, th0_new, cand, 0.0, float(step))
            rows += 1
            prev_stored = True
        else:
            prev_stored = False
        prev, cand = cand, prev
        th0_prev = th0_new
        in_prev = in_new
    return _OK, rows, evals, th0_prev


@njit(cache=True)
def _dense_flags(p0, alpha, k, is_rotor, mc, thc, radius, n):
    """In-disk flags of the k-kick image on a uniform theta0 grid."""
    flags = np.zeros(n, dtype=np.uint8)
    r2 = radius * radius
    wrap_p = not is_rotor
    for j in range(n):
        th0 = TWO_PI * j / n
        if is_rotor:
            m = p0
            th = th0
            for _ in range(k):
                m = m + alpha * np.cos(th)
                th = (th - alpha * m) % TWO_PI
        else:
            m = p0
            th = th0
            for _ in range(k):
                m = _wrap_pm(m + alpha * np.sin(th))
                th = _wrap_pm(th - alpha * np.sin(m))
        if _dist2(m, th, mc, thc, wrap_p) <= r2:
            flags[j] = 1
    return flags


# ---------------------------------------------------------------------------
# tracing and assembly


def _assemble(arr: np.ndarray) -> list[tuple[np.ndarray, bool, bool]]:
    """Cut the retained rows into (data, has_entry, has_exit) runs.

    Rows are in walk order; a bracketing row shared by two adjacent
    filaments (a single out-of-disk point between two in-disk runs) is
    duplicated into both.
    """
    out = []
    flags = arr[:, C_IN] > 0.5
    steps = arr[:, C_STEP]
    n = len(arr)
    i = 0
    while i < n:
        if not flags[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and flags[j + 1] and steps[j + 1] == steps[j] + 1.0:
            j += 1
        lo = i
        if i > 0 and not flags[i - 1] and steps[i - 1] == steps[i] - 1.0:
            lo = i - 1
        hi = j
        if j + 1 < n and not flags[j + 1] and steps[j + 1] == steps[j] + 1.0:
            hi = j + 1
        out.append((arr[lo : hi + 1].copy(), lo < i, hi > j))
        i = j + 1
    return out


def trace_manifold(
    m0: float,
    k: int,
    params: MapParams,
    det: Detector,
    cfg: TraceConfig | None = None,
) -> list[Filament]:
    """Trace the k-kick image of the line p = m0 and keep the filaments.

    Walks theta0 over [0, 2pi) with the adaptive predictor-corrector
    step; returns the in-disk sections as `Filament`s ordered and
    numbered by the theta0 of their first retained point.  Consecutive
    retained points are at most (1 + epsilon) * L_max apart.  Raises
    RuntimeError when the evaluation budget is exhausted or the step
    underflows (pathological tangency).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if det.kind is not params.kind:
        raise ValueError("detector and map live on different phase spaces")
    cfg = cfg or TraceConfig()
    L_max = cfg.resolve_spacing(det)
    is_rotor = params.kind is MapKind.KICKED_ROTOR
    cap = 1 << 17
    while True:
        buf = np.empty((cap, NCOL))
        status, rows, evals, th0 = _trace_kernel(
            float(m0),
            float(params.alpha),
            int(k),
            is_rotor,
            float(det.m_c),
            float(det.theta_c),
            float(det.radius),
            L_max,
            float(cfg.epsilon),
            int(cfg.max_points),
            buf,
        )
        if status == _OVERFLOW:
            cap *= 2
            continue
        if status == _MAX_POINTS:
            raise RuntimeError(
                f"trace exceeded max_points = {cfg.max_points} evaluations "
                f"at theta0 = {th0:.6f}"
            )
        if status == _UNDERFLOW:
            raise RuntimeError(
                f"step length underflowed below 1e-14 at theta0 = {th0:.6f}; "
                "pathological tangency"
            )
        break
    arr = buf[:rows]
    runs = _assemble(arr)
    if len(runs) > 1:
        first, f_entry, _ = runs[0]
        last, _, l_exit = runs[-1]
        starts_at_zero = first[0, C_THETA0] == 0.0 and first[0, C_IN] > 0.5
        ends_at_two_pi = last[-1, C_THETA0] == TWO_PI and last[-1, C_IN] > 0.5
        if starts_at_zero and ends_at_two_pi:
            tail = last[:-1].copy()
            tail[:, C_THETA0] -= TWO_PI
            merged = np.concatenate([tail, first])
            runs = [(merged, runs[-1][1], runs[0][2])] + runs[1:-1]
    runs.sort(key=lambda r: r[0][0, C_THETA0])
    filaments = [
        Filament(
            id=i,
            data=data,
            has_entry=entry,
            has_exit=exit_,
            m0=float(m0),
            k=int(k),
            params=params,
            det=det,
        )
        for i, (data, entry, exit_) in enumerate(runs)
    ]
    bound = (1.0 + cfg.epsilon) * L_max * (1.0 + 1e-9)
    for f in filaments:
        worst = f.segment_lengths().max(initial=0.0)
        if worst > bound:
            raise AssertionError(
                f"spacing {worst} exceeds (1+epsilon) L_max = {bound}"
            )
    logger.info(
        "traced %d filaments (%d retained points, %d evaluations)",
        len(filaments),
        rows,
        evals,
    )
    return filaments


def dense_disk_runs(
    m0: float,
    k: int,
    params: MapParams,
    det: Detector,
    n_samples: int = 10**7,
) -> tuple[int, np.ndarray]:
    """Independent filament count from a dense uniform theta0 sweep.

    Maps ``n_samples`` equispaced theta0 values, marks the images inside
    the detector disk and clusters contiguous runs, merging across the
    0/2pi seam.  Returns (count, runs) with one (start, stop) index pair
    per run; a seam-crossing run has start > stop.
    """
    flags = _dense_flags(
        float(m0),
        float(params.alpha),
        int(k),
        params.kind is MapKind.KICKED_ROTOR,
        float(det.m_c),
        float(det.theta_c),
        float(det.radius),
        int(n_samples),
    )
    if flags.all():
        return 1, np.array([[0, n_samples - 1]])
    edges = np.diff(flags.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    stops = np.flatnonzero(edges == -1)
    if flags[0]:
        starts = np.concatenate([[0], starts])
    if flags[-1]:
        stops = np.concatenate([stops, [n_samples - 1]])
    runs = np.stack([starts, stops], axis=1)
    if len(runs) > 1 and flags[0] and flags[-1]:
        runs[-1, 1] = runs[0, 1]
        runs = runs[1:]
    return len(runs), runs


def split_fingers(f: Filament) -> list[Filament]:
    """Split a filament at caustics whose tangent turns around in-disk.

    A sign change of the tangent theta component between consecutive
    in-disk points marks a caustic inside the detector (a finger tip);
    the filament is cut between those rows so each output piece sweeps
    theta monotonically.  Pieces shorter than two points are dropped.
    """
    ut = f.data[:, C_M11]
    inside = f.in_disk_mask
    cuts = [
        i
        for i in range(len(f.data) - 1)
        if inside[i] and inside[i + 1] and ut[i] * ut[i + 1] < 0.0
    ]
    if not cuts:
        return [f]
    logger.warning(
        "filament %d contains %d caustic(s) inside the detector; "
        "split into monotone pieces (no uniformization applied)",
        f.id,
        len(cuts),
    )
    pieces = []
    lo = 0
    bounds = cuts + [len(f.data) - 1]
    for idx, cut in enumerate(bounds):
        hi = cut if idx < len(cuts) else len(f.data) - 1
        data = f.data[lo : hi + 1]
        if len(data) >= 2:
            pieces.append(
                replace(
                    f,
                    data=data.copy(),
                    has_entry=f.has_entry and lo == 0,
                    has_exit=f.has_exit and hi == len(f.data) - 1,
                    split_piece=True,
                )
            )
        lo = hi + 1
    return pieces


def split_all_fingers(filaments: list[Filament]) -> list[Filament]:
    """Apply `split_fingers` to every filament and renumber by theta0."""
    pieces = [p for f in filaments for p in split_fingers(f)]
    pieces.sort(key=lambda p: p.data[0, C_THETA0])
    return [replace(p, id=i) for i, p in enumerate(pieces)]


def resample_filament(f: Filament, K: int) -> Filament:
    """Reparametrize a filament to K points even in polyline arclength.

    All columns are interpolated linearly in arclength; endpoints are
    kept exactly.  The in-disk flags are re-derived from the detector
    and the step column is replaced by the node index.
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    s = f.arclength()
    total = s[-1]
    if not total > 0.0:
        raise ValueError("cannot resample a zero-length filament")
    targets = np.linspace(0.0, total, K)
    data = np.empty((K, NCOL))
    for c in range(NCOL):
        data[:, c] = np.interp(targets, s, f.data[:, c])
    # wrapped angles cannot be interpolated across a seam; rebuild them
    # from the unwrapped lifts, which are linear along the walk
    kind = f.params.kind
    if kind is MapKind.KICKED_HARPER:
        data[:, C_THETA] = wrap_pm_pi(data[:, C_THETA_LIFT])
        data[:, C_P] = wrap_pm_pi(data[:, C_P_LIFT])
    else:
        data[:, C_THETA] = wrap_angle(data[:, C_THETA_LIFT])
        data[:, C_P] = data[:, C_P_LIFT]
    data[0] = f.data[0]
    data[-1] = f.data[-1]
    data[:, C_IN] = f.det.in_disk(data[:, C_P], data[:, C_THETA]).astype(float)
    data[:, C_STEP] = np.arange(K, dtype=float)
    return replace(f, data=data)


def save_filaments_csv(filaments: list[Filament], path) -> None:
    """Write all retained points as CSV, one row per point."""
    rows = []
    for f in filaments:
        block = np.empty((len(f.data), 8))
        block[:, 0] = f.id
        block[:, 1] = f.data[:, C_THETA0]
        block[:, 2] = f.data[:, C_P]
        block[:, 3] = f.data[:, C_THETA]
        block[:, 4] = f.data[:, C_GEOM]
        block[:, 5] = f.data[:, C_HK]
        block[:, 6] = f.data[:, C_MU_U]
        block[:, 7] = f.data[:, C_MU_S]
        rows.append(block)
    table = np.concatenate(rows) if rows else np.empty((0, 8))
    np.savetxt(
        path,
        table,
        fmt="%.17g",
        delimiter=",",
        header="filament_id,theta0,m,theta,geom_action,hk_action,mu_unsigned,mu_signed",
        comments="",
    )
