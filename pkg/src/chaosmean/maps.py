"""Classical kicked maps on the cylinder and on the torus.

Two area-preserving maps are implemented:

* kicked rotor on the cylinder (m, theta) in R x [0, 2pi):
      m'     = m + alpha * cos(theta)
      theta' = theta - alpha * m'          (mod 2pi)

* kicked Harper map on the torus (phi, theta) in [-pi, pi)^2:
      phi'   = phi + alpha * sin(theta)    (mod +-pi)
      theta' = theta - alpha * sin(phi')   (mod +-pi)

Besides single steps the module provides one-kick Jacobians and full
trajectory iteration with the tangent-frame bookkeeping needed by the
semiclassical modules: monodromy matrix, evolved tangent of the initial
momentum line, caustic (vertical-tangent) counters, unwrapped coordinate
lifts and the discrete action sums.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

__all__ = [
    "MapKind",
    "MapParams",
    "PhasePoint",
    "TangentFrame",
    "TrajectoryRecord",
    "krs_step",
    "khm_step",
    "map_step",
    "jacobian_step",
    "iterate_trajectory",
    "wrap_angle",
    "wrap_pm_pi",
    "phase_distance",
]


class MapKind(enum.Enum):
    KICKED_ROTOR = "rotor"
    KICKED_HARPER = "harper"


@dataclass(frozen=True)
class MapParams:
    """Map selector and kick strength."""

    kind: MapKind
    alpha: float

    def __post_init__(self):
        if not isinstance(self.kind, MapKind):
            object.__setattr__(self, "kind", MapKind(self.kind))
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


class PhasePoint(NamedTuple):
    """Point (p, theta); p is m on the cylinder, phi on the torus."""

    p: float
    theta: float


@dataclass(frozen=True)
class TangentFrame:
    """Monodromy matrix and the evolved tangent of the initial momentum line.

    ``matrix`` is the 2x2 monodromy in (p, theta) ordering, ``tangent`` is
    matrix @ (0, 1), and ``det`` is the determinant accumulated as the
    product of the per-step determinants (well conditioned even when the
    matrix entries are large).
    """

    matrix: np.ndarray
    tangent: np.ndarray
    det: float


@dataclass(frozen=True)
class TrajectoryRecord:
    """Bookkeeping for one trajectory of ``k`` kicks."""

    x0: PhasePoint
    final: PhasePoint
    k: int
    frame: TangentFrame
    theta_unwrapped: float
    p_unwrapped: float
    geom_action: float
    hk_action: float
    mu_unsigned: int
    mu_signed: int
    mu_phase: int


def wrap_angle(theta):
    """Reduce an angle into [0, 2pi)."""
    return np.mod(theta, TWO_PI)


def wrap_pm_pi(x):
    """Reduce into [-pi, pi): x + 2pi if x < -pi, x - 2pi if x >= pi.

    Single-branch reduction; exact for |x| < 3pi, which covers one kick of
    either map for alpha < 2pi. Arrays are handled elementwise.
    """
    x = np.asarray(x)
    out = np.where(x < -math.pi, x + TWO_PI, x)
    out = np.where(out >= math.pi, out - TWO_PI, out)
    if out.ndim == 0:
        return float(out)
    return out


def krs_step(m, theta, alpha):
    """One kicked-rotor kick; returns (m', theta') with theta' in [0, 2pi)."""
    m1 = m + alpha * np.cos(theta)
    th1 = np.mod(theta - alpha * m1, TWO_PI)
    return m1, th1


def khm_step(phi, theta, alpha):
    """One kicked-Harper kick; returns (phi', theta'), both in [-pi, pi)."""
    phi1 = wrap_pm_pi(phi + alpha * np.sin(theta))
    th1 = wrap_pm_pi(theta - alpha * np.sin(phi1))
    return phi1, th1


def map_step(x: PhasePoint, params: MapParams) -> PhasePoint:
    """Apply one kick of the selected map to a phase-space point."""
    if params.kind is MapKind.KICKED_ROTOR:
        m, th = krs_step(x.p, x.theta, params.alpha)
    else:
        m, th = khm_step(x.p, x.theta, params.alpha)
    return PhasePoint(float(m), float(th))


def jacobian_step(x: PhasePoint, params: MapParams) -> np.ndarray:
    """One-kick Jacobian at x, rows/columns in (p, theta) ordering.

    The matrix is evaluated at the pre-kick point; its determinant is 1
    identically (composition of two unit shears).
    """
    a = params.alpha
    if params.kind is MapKind.KICKED_ROTOR:
        s = math.sin(x.theta)
        return np.array([[1.0, -a * s], [-a, 1.0 + a * a * s]])
    c_th = math.cos(x.theta)
    phi1 = wrap_pm_pi(x.p + a * math.sin(x.theta))
    c_ph = math.cos(phi1)
    return np.array([[1.0, a * c_th], [-a * c_ph, 1.0 - a * a * c_ph * c_th]])


# ---------------------------------------------------------------------------
# trajectory kernels
#
# The kernels return, besides the final point, the full tangent-frame and
# action bookkeeping. Layout of the result vector:
#   0: p  1: theta  2: theta_unwrapped  3: p_unwrapped
#   4: geom_action  5: hk_action
#   6: mu_unsigned  7: mu_signed  8: n_zero_tangent (exact zeros perturbed)
#   9..12: monodromy M00 M01 M10 M11   13: det product
#   14: tangent u_p  15: tangent u_theta  16: mu_phase
#
# The _into variants fill a caller-owned length-17 buffer so that tight
# callers (the manifold tracer) avoid one allocation per trajectory.

RUN_NCOL = 17


@njit(cache=True)
def _run_rotor_into(out, m0, th0, alpha, k):
    m = m0
    th = th0
    th_lift = th0
    geom = 0.0
    hk = 0.0
    mu_u = 0
    mu_s = 0
    nzero = 0
    m00 = 1.0
    m01 = 0.0
    m10 = 0.0
    m11 = 1.0
    detp = 1.0
    uth_prev = 1.0
    qsum = 0.0
    for _ in range(k):
        s = np.sin(th)
        c = np.cos(th)
        hk += alpha * s
        m = m + alpha * c
        dth = -alpha * m
        th_lift = th_lift + dth
        th = (th + dth) % TWO_PI
        geom += m * dth
        hk -= alpha * 0.5 * m * m
        # one-kick Jacobian [[1, -a s], [-a, 1 + a^2 s]] times accumulated M
        j01 = -alpha * s
        j10 = -alpha
        j11 = 1.0 + alpha * alpha * s
        n00 = m00 + j01 * m10
        n01 = m01 + j01 * m11
        n10 = j10 * m00 + j11 * m10
        n11 = j10 * m01 + j11 * m11
        # quarter-phase signatures of the kick's angle sum (curvature
        # n01/m11: post-kick tangent p over pre-step tangent theta) and of
        # the momentum sum back to angles (-n11/n01)
        if n01 * m11 > 0.0:
            qsum += 0.5
        else:
            qsum -= 0.5
        if n11 * n01 < 0.0:
            qsum += 0.5
        else:
            qsum -= 0.5
        m00, m01, m10, m11 = n00, n01, n10, n11
        detp *= j11 - j01 * j10
        uth = m11
        if uth == 0.0:
            uth = 1e-14
            nzero += 1
        if uth * uth_prev < 0.0:
            mu_u += 1
            if uth_prev > 0.0:
                mu_s += 1
            else:
                mu_s -= 1
        uth_prev = uth
    out[0] = m
    out[1] = th
    out[2] = th_lift
    out[3] = m
    out[4] = geom
    out[5] = hk
    out[6] = mu_u
    out[7] = mu_s
    out[8] = nzero
    out[9] = m00
    out[10] = m01
    out[11] = m10
    out[12] = m11
    out[13] = detp
    out[14] = m01
    out[15] = m11
    out[16] = qsum


@njit(cache=True)
def _run_rotor(m0, th0, alpha, k):
    out = np.empty(RUN_NCOL)
    _run_rotor_into(out, m0, th0, alpha, k)
    return out


@njit(cache=True)
def _run_harper_into(out, phi0, th0, alpha, k):
    phi = phi0
    th = th0
    th_lift = th0
    phi_lift = phi0
    geom = 0.0
    hk = 0.0
    mu_u = 0
    mu_s = 0
    nzero = 0
    m00 = 1.0
    m01 = 0.0
    m10 = 0.0
    m11 = 1.0
    detp = 1.0
    uth_prev = 1.0
    qsum = 0.0
    for _ in range(k):
        s_th = np.sin(th)
        c_th = np.cos(th)
        hk -= alpha * c_th
        dphi = alpha * s_th
        phi_lift = phi_lift + dphi
        phi_raw = phi + dphi
        phi = phi_raw
        if phi < -np.pi:
            phi += TWO_PI
        elif phi >= np.pi:
            phi -= TWO_PI
        # rewrapping the momentum label shifts the kick's angle-sum phase
        # by 2 pi V (theta + pi); theta is measured from the -pi lattice origin
        thv = th
        if thv < -np.pi:
            thv += TWO_PI
        elif thv >= np.pi:
            thv -= TWO_PI
        hk += (phi - phi_raw) * (thv + np.pi)
        s_ph = np.sin(phi)
        c_ph = np.cos(phi)
        dth = -alpha * s_ph
        th_lift = th_lift + dth
        th = th + dth
        if th < -np.pi:
            th += TWO_PI
        elif th >= np.pi:
            th -= TWO_PI
        # horizontal substep at momentum phi_lift sweeps dth
        geom += phi_lift * dth
        hk += -alpha * c_ph + phi * dth
        j01 = alpha * c_th
        j10 = -alpha * c_ph
        j11 = 1.0 - alpha * alpha * c_ph * c_th
        n00 = m00 + j01 * m10
        n01 = m01 + j01 * m11
        n10 = j10 * m00 + j11 * m10
        n11 = j10 * m01 + j11 * m11
        # quarter-phase signatures, as in the rotor kernel
        if n01 * m11 > 0.0:
            qsum += 0.5
        else:
            qsum -= 0.5
        if n11 * n01 < 0.0:
            qsum += 0.5
        else:
            qsum -= 0.5
        m00, m01, m10, m11 = n00, n01, n10, n11
        detp *= j11 - j01 * j10
        uth = m11
        if uth == 0.0:
            uth = 1e-14
            nzero += 1
        if uth * uth_prev < 0.0:
            mu_u += 1
            if uth_prev > 0.0:
                mu_s += 1
            else:
                mu_s -= 1
        uth_prev = uth
    out[0] = phi
    out[1] = th
    out[2] = th_lift
    out[3] = phi_lift
    out[4] = geom
    out[5] = hk
    out[6] = mu_u
    out[7] = mu_s
    out[8] = nzero
    out[9] = m00
    out[10] = m01
    out[11] = m10
    out[12] = m11
    out[13] = detp
    out[14] = m01
    out[15] = m11
    out[16] = qsum


@njit(cache=True)
def _run_harper(phi0, th0, alpha, k):
    out = np.empty(RUN_NCOL)
    _run_harper_into(out, phi0, th0, alpha, k)
    return out


def _run_map(p0, th0, alpha, k, kind: MapKind):
    if kind is MapKind.KICKED_ROTOR:
        return _run_rotor(p0, th0, alpha, k)
    return _run_harper(p0, th0, alpha, k)


def iterate_trajectory(x0: PhasePoint, k: int, params: MapParams) -> TrajectoryRecord:
    """Iterate ``k`` kicks from ``x0`` with full tangent-frame bookkeeping.

    Returns a :class:`TrajectoryRecord` carrying the final point, the
    monodromy in (p, theta) ordering, the evolved tangent of the initial
    momentum line (the image of (0, 1)), the unwrapped coordinate lifts,
    the discrete geometric action sum(p dtheta) over the substep polyline,
    the per-kick action sum that sets the coherent-state propagator phase,
    the unsigned/signed counters of sign changes of the tangent theta
    component (caustic crossings), and the net quarter-phase count of the
    branch: each kick contributes half the sign of the angle-sum curvature
    plus half the sign of the momentum-sum curvature, so mu_phase tracks
    the accumulated stationary-phase signature rather than crossings.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    out = _run_map(float(x0.p), float(x0.theta), params.alpha, int(k), params.kind)
    if out[8] > 0:
        logger.warning(
            "tangent theta-component hit exactly zero %d time(s); perturbed by 1e-14",
            int(out[8]),
        )
    matrix = np.array([[out[9], out[10]], [out[11], out[12]]])
    frame = TangentFrame(matrix=matrix, tangent=np.array([out[10], out[12]]), det=float(out[13]))
    return TrajectoryRecord(
        x0=x0,
        final=PhasePoint(float(out[0]), float(out[1])),
        k=int(k),
        frame=frame,
        theta_unwrapped=float(out[2]),
        p_unwrapped=float(out[3]),
        geom_action=float(out[4]),
        hk_action=float(out[5]),
        mu_unsigned=int(out[6]),
        mu_signed=int(out[7]),
        mu_phase=int(round(out[16])),
    )


def phase_distance(a: PhasePoint, b: PhasePoint, kind: MapKind) -> float:
    """Distance with the angle difference wrapped (both coordinates on the torus)."""
    dth = wrap_pm_pi(a.theta - b.theta)
    dp = a.p - b.p
    if kind is MapKind.KICKED_HARPER:
        dp = wrap_pm_pi(dp)
    return math.hypot(dp, dth)
