"""Classical and interference-corrected detector means from filaments.

The classical baseline (`twa_mean`) integrates the detector's smooth
symbol along the traced filaments in the initial angle theta0; its
brute-force counterpart (`twa_uniform`) does the same with a dense
uniform theta0 sweep and serves as an audit.

The semiclassical mean (`smv_mean`) adds one oscillatory correction per
unordered pair of filaments.  For a pair, the two curves are resampled
to K points, oriented along their common principal direction and matched
index-to-index; each matched index kappa contributes at the midpoint
eta_kappa = (x_kappa^+ + x_kappa^-)/2 with

    2 * W[O](eta) * w * cos(S/hbar + mu*pi/2),

integrated by trapezoid in the arclength of the midpoint curve, clipped
to the detector disk.  S is the difference of the two endpoints' branch
phases, transported to the common midpoint angle:

    S = (m0*theta0^+ + F^+) - (m0*theta0^- + F^-) - pbar * d(theta),

where F is the trajectory's accumulated stationary phase (the same
quantity that drives the propagator phase in `hk`), pbar the mean final
momentum and d(theta) the short wrapped angle difference theta^+ -
theta^-.  Each branch phase obeys dphi/dtheta = m, so S/hbar reproduces
the local fringe wavevector of the underlying wavefunction exactly;
w = sqrt|dtheta0^+/deta * dtheta0^-/deta| / 2pi; mu is the difference of
the branches' accumulated quarter-phase signatures (mu_phase), the
stationary-phase generalization of a caustic count that stays correct
when the step generators' curvatures change sign along the path.
Swapping the +/- labels flips (S, mu) jointly and leaves every
contribution unchanged.

Pairs may be pruned by an action threshold: a pair enters the sum only
when min_kappa |S_kappa| <= c_prune * hbar.  `calibrate_prune` tunes
c_prune on a reference configuration until the pruned sum matches the
full sum.  Pair contributions are accumulated with math.fsum in a fixed
pair order, so results do not depend on any parallel execution of the
surrounding code.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import erfcx

from .manifold import (
    C_HK,
    C_MU_PHASE,
    C_P,
    C_THETA,
    C_THETA0,
    Filament,
    resample_filament,
    split_all_fingers,
)
from .maps import MapKind, MapParams, TrajectoryRecord, wrap_angle, wrap_pm_pi
from .wigner import Detector

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

__all__ = [
    "PruneMode",
    "PruneConfig",
    "FilamentPair",
    "SmvResult",
    "twa_mean",
    "twa_uniform",
    "pair_filaments",
    "center_action",
    "action_between",
    "pair_maslov",
    "pair_measure",
    "smv_mean",
    "calibrate_prune",
]


class PruneMode(enum.Enum):
    FULL = "full"
    ACTION_THRESHOLD = "action_threshold"


@dataclass(frozen=True)
class PruneConfig:
    """Pair selection policy: keep all pairs, or only near-stationary ones."""

    mode: PruneMode = PruneMode.FULL
    c_prune: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", PruneMode(self.mode))
        if self.mode is PruneMode.ACTION_THRESHOLD:
            if self.c_prune is None or not self.c_prune > 0.0:
                raise ValueError(
                    f"c_prune must be positive for threshold pruning, got {self.c_prune}"
                )


@dataclass(frozen=True)
class FilamentPair:
    """Matched geometry of one unordered filament pair.

    Arrays run over the kept indices kappa (midpoints inside the detector
    disk), in traversal order.  ``eta`` holds the absolute midpoints,
    ``chord`` the wrapped differences x^+ - x^-, ``eta_s`` the arclength
    coordinate of each kept midpoint along the full midpoint curve,
    ``weights`` the trapezoid weights (zero for isolated nodes),
    ``actions`` the center actions S_kappa, ``measures`` the densities
    w_kappa, and ``theta0_plus/minus`` the matched initial angles.
    ``ends_open`` flags whether the first/last kept node sits at the end
    of the matched data, where the curves leave the traced disk and the
    integrand is cut off mid-oscillation rather than decayed.
    """

    plus: int
    minus: int
    eta: np.ndarray
    chord: np.ndarray
    eta_s: np.ndarray
    weights: np.ndarray
    actions: np.ndarray
    measures: np.ndarray
    theta0_plus: np.ndarray
    theta0_minus: np.ndarray
    mu: int
    ends_open: tuple[bool, bool] = (False, False)

    def __len__(self) -> int:
        return len(self.actions)


# ---------------------------------------------------------------------------
# classical baseline


def twa_mean(filaments: list[Filament], det: Detector) -> float:
    """(1/2pi) integral over theta0 of the detector symbol along filaments."""
    total = 0.0
    for f in filaments:
        xy = f.data[:, (C_P, C_THETA)]
        sym = det.weyl_symbol(xy[:, 0], xy[:, 1])
        total += float(np.trapezoid(sym, f.data[:, C_THETA0]))
    return total / TWO_PI


@njit(cache=True)
def _twa_uniform_kernel(m0, alpha, k, is_rotor, mc, thc, sigma, r2, n):
    inv = 1.0 / (TWO_PI * sigma * sigma)
    half = -0.5 / (sigma * sigma)
    total = 0.0
    for j in range(n):
        th0 = TWO_PI * j / n
        p = m0
        th = th0
        if is_rotor:
            for _ in range(k):
                p = p + alpha * np.cos(th)
                th = (th - alpha * p) % TWO_PI
        else:
            for _ in range(k):
                p = p + alpha * np.sin(th)
                if p < -np.pi:
                    p += TWO_PI
                elif p >= np.pi:
                    p -= TWO_PI
                th = th - alpha * np.sin(p)
                if th < -np.pi:
                    th += TWO_PI
                elif th >= np.pi:
                    th -= TWO_PI
        dp = p - mc
        if not is_rotor:
            if dp < -np.pi:
                dp += TWO_PI
            elif dp >= np.pi:
                dp -= TWO_PI
        dth = (th - thc + np.pi) % TWO_PI - np.pi
        d2 = dp * dp + dth * dth
        if d2 <= r2:
            total += inv * np.exp(half * d2)
    return total / n


def twa_uniform(
    m0: float,
    k: int,
    params: MapParams,
    det: Detector,
    n_samples: int = 10**7,
) -> float:
    """Brute-force classical mean: uniform theta0 Riemann sum.

    The symbol is cut off at the detector radius, matching the filament
    quadrature, which only ever integrates inside the traced disk.
    """
    return float(
        _twa_uniform_kernel(
            float(m0),
            float(params.alpha),
            int(k),
            params.kind is MapKind.KICKED_ROTOR,
            float(det.m_c),
            float(det.theta_c),
            float(det.sigma),
            float(det.radius) ** 2,
            int(n_samples),
        )
    )


# ---------------------------------------------------------------------------
# pair construction


def _displacements(f: Filament, det: Detector) -> np.ndarray:
    """(n, 2) wrapped offsets of the filament's points from the detector center."""
    dm, dth = det.displacements(f.data[:, C_P], f.data[:, C_THETA])
    return np.stack([np.asarray(dm, dtype=float), np.asarray(dth, dtype=float)], axis=1)


def _phase_difference(hk_m, hk_p, p_m, p_p, th_m, th_p, th0_m, th0_p, m0):
    """Branch-phase difference of the matched endpoints at their midpoint.

    Each endpoint carries the phase m0*theta0 + F of its branch of the
    evolved initial line, where F is the trajectory's accumulated
    stationary phase; along a branch this phase obeys dphi/dtheta = m.
    Moving both endpoint phases to the common midpoint angle at their
    own local momenta subtracts pbar times the short wrapped chord
    angle (the matched points sit in the same detector disk, so
    |dtheta| < pi).
    """
    chord = 0.5 * (p_m + p_p) * wrap_pm_pi(th_p - th_m)
    return (m0 * th0_p + hk_p) - (m0 * th0_m + hk_m) - chord


def action_between(
    rec_minus: TrajectoryRecord, rec_plus: TrajectoryRecord, m0: float
) -> float:
    """Center action between two trajectories launched from the line p = m0."""
    return float(
        _phase_difference(
            rec_minus.hk_action,
            rec_plus.hk_action,
            rec_minus.final.p,
            rec_plus.final.p,
            rec_minus.final.theta,
            rec_plus.final.theta,
            rec_minus.x0.theta,
            rec_plus.x0.theta,
            m0,
        )
    )


def _make_pair(fp: Filament, fm: Filament, det: Detector, direction: np.ndarray):
    """Match two resampled filaments and build the pair geometry, or None."""
    dp = _displacements(fp, det)
    dm = _displacements(fm, det)
    plus = fp.data if (dp[-1] - dp[0]) @ direction >= 0.0 else fp.data[::-1]
    minus = fm.data if (dm[-1] - dm[0]) @ direction >= 0.0 else fm.data[::-1]
    dplus = dp if plus is fp.data else dp[::-1]
    dminus = dm if minus is fm.data else dm[::-1]

    mid = 0.5 * (dplus + dminus)
    keep = np.einsum("ij,ij->i", mid, mid) <= det.radius**2
    if not keep.any():
        return None

    # arclength of the midpoint curve, over all K matched nodes
    deltas = np.linalg.norm(np.diff(mid, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(deltas)])

    th0_p = plus[:, C_THETA0]
    th0_m = minus[:, C_THETA0]
    grad_p = _fd_gradient(th0_p, s)
    grad_m = _fd_gradient(th0_m, s)
    w = np.sqrt(np.abs(grad_p * grad_m)) / TWO_PI

    S = _phase_difference(
        minus[:, C_HK],
        plus[:, C_HK],
        minus[:, C_P],
        plus[:, C_P],
        minus[:, C_THETA],
        plus[:, C_THETA],
        minus[:, C_THETA0],
        plus[:, C_THETA0],
        fp.m0,
    )

    mu_diff = np.rint(plus[:, C_MU_PHASE]) - np.rint(minus[:, C_MU_PHASE])

    kept = np.flatnonzero(keep)
    mu_kept = mu_diff[kept]
    mu = int(mu_kept[len(mu_kept) // 2])
    if not np.all(mu_kept == mu):
        logger.warning(
            "caustic-count difference varies along pair (%d, %d); using %d",
            fp.id,
            fm.id,
            mu,
        )

    weights = _trapezoid_weights(s, kept)
    wrap = wrap_angle if fp.params.kind is MapKind.KICKED_ROTOR else wrap_pm_pi
    eta_abs = np.empty((len(kept), 2))
    eta_abs[:, 0] = det.m_c + mid[kept, 0]
    eta_abs[:, 1] = wrap(det.theta_c + mid[kept, 1])
    if fp.params.kind is MapKind.KICKED_HARPER:
        eta_abs[:, 0] = wrap_pm_pi(eta_abs[:, 0])

    return FilamentPair(
        plus=fp.id,
        minus=fm.id,
        eta=eta_abs,
        chord=(dplus - dminus)[kept],
        eta_s=s[kept],
        weights=weights,
        actions=S[kept],
        measures=w[kept],
        theta0_plus=th0_p[kept],
        theta0_minus=th0_m[kept],
        mu=mu,
        ends_open=(kept[0] == 0, kept[-1] == len(keep) - 1),
    )


def _fd_gradient(y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """dy/ds by central differences, one-sided at the ends, 0 on zero gaps."""
    out = np.zeros_like(y)
    n = len(y)
    if n < 2:
        return out
    num = np.empty(n)
    den = np.empty(n)
    num[0] = y[1] - y[0]
    den[0] = s[1] - s[0]
    num[-1] = y[-1] - y[-2]
    den[-1] = s[-1] - s[-2]
    num[1:-1] = y[2:] - y[:-2]
    den[1:-1] = s[2:] - s[:-2]
    good = den != 0.0
    out[good] = num[good] / den[good]
    return out


def _trapezoid_weights(s: np.ndarray, kept: np.ndarray) -> np.ndarray:
    """Per-node trapezoid weights over contiguous kept blocks; 0 if isolated."""
    w = np.zeros(len(kept))
    if len(kept) == 0:
        return w
    breaks = np.flatnonzero(np.diff(kept) != 1)
    starts = np.concatenate([[0], breaks + 1])
    stops = np.concatenate([breaks, [len(kept) - 1]])
    for a, b in zip(starts, stops):
        if b == a:
            continue
        block = s[kept[a : b + 1]]
        w[a] += 0.5 * (block[1] - block[0])
        w[b] += 0.5 * (block[-1] - block[-2])
        if b - a > 1:
            w[a + 1 : b] += 0.5 * (block[2:] - block[:-2])
    return w


def pair_filaments(
    filaments: list[Filament], K: int, det: Detector | None = None
) -> list[FilamentPair]:
    """All unordered pairs of distinct filaments, matched at K points each.

    Filaments are resampled to K nodes, oriented along the pair's common
    principal direction and matched index-to-index; pairs whose midpoint
    curve misses the detector disk entirely are skipped (logged).
    """
    if len(filaments) < 2:
        return []
    if det is None:
        det = filaments[0].det
    resampled = [resample_filament(f, K) for f in filaments]
    disps = [_displacements(f, det) for f in resampled]
    means = [d.mean(axis=0) for d in disps]
    pairs = []
    skipped = 0
    # per-filament scatter about its own mean: pooling these yields the common
    # line direction of the pair, unbiased by the separation between filaments
    scatters = []
    for d in disps:
        c = d - d.mean(axis=0)
        scatters.append(c.T @ c)
    for i in range(len(resampled)):
        for j in range(i + 1, len(resampled)):
            _, vecs = np.linalg.eigh(scatters[i] + scatters[j])
            direction = vecs[:, -1]  # largest eigenvalue last in eigh order
            a, b = means[i], means[j]
            if (a[0], a[1]) >= (b[0], b[1]):
                fp, fm = resampled[i], resampled[j]
            else:
                fp, fm = resampled[j], resampled[i]
            pair = _make_pair(fp, fm, det, direction)
            if pair is None:
                skipped += 1
                continue
            pairs.append(pair)
    if skipped:
        logger.info("skipped %d pair(s) with no midpoints inside the disk", skipped)
    return pairs


def center_action(pair: FilamentPair, kappa: int) -> float:
    """Center action S at matched index kappa of the pair's kept domain."""
    return float(pair.actions[kappa])


def pair_maslov(pair: FilamentPair) -> int:
    """Quarter-phase index of the pair: mu(plus) - mu(minus).

    Built from the branches' accumulated stationary-phase signatures
    (mu_phase), which reduce to plain caustic counts away from curvature
    sign changes of the map's step generators.
    """
    return pair.mu


def pair_measure(pair: FilamentPair, kappa: int) -> float:
    """Integration density w at matched index kappa of the kept domain."""
    return float(pair.measures[kappa])


# ---------------------------------------------------------------------------
# the semiclassical mean


@dataclass(frozen=True)
class SmvResult:
    """Value and per-pair breakdown of the semiclassical detector mean."""

    twa: float
    interference: float
    smv: float
    n_filaments: int
    n_pairs: int
    n_pruned: int
    pair_plus: np.ndarray
    pair_minus: np.ndarray
    pair_contribution: np.ndarray
    pair_min_abs_action: np.ndarray
    pair_mu: np.ndarray

    @property
    def report(self) -> dict:
        return {
            "twa": self.twa,
            "interference": self.interference,
            "smv": self.smv,
            "n_filaments": self.n_filaments,
            "n_pairs": self.n_pairs,
            "n_pruned": self.n_pruned,
            "per_pair": [
                {
                    "plus": int(p),
                    "minus": int(m),
                    "contribution": float(c),
                    "min_abs_action": float(a),
                    "mu": int(u),
                }
                for p, m, c, a, u in zip(
                    self.pair_plus,
                    self.pair_minus,
                    self.pair_contribution,
                    self.pair_min_abs_action,
                    self.pair_mu,
                )
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.report, **kwargs)


@dataclass(frozen=True)
class _PairBatch:
    """hbar-independent pair geometry flattened for vector evaluation.

    Node rows hold the trapezoid term of every kept node of every pair;
    end rows hold the open-end tail geometry: the outward first and
    second action derivatives and the along-ray offset u0 of the
    symbol's peak, from which the tail integral follows for any hbar.
    ``min_abs`` is each pair's smallest |S|, the pruning statistic.
    """

    n_pairs: int
    sig2: float
    node_pair: np.ndarray
    node_amp: np.ndarray
    node_S: np.ndarray
    node_mu: np.ndarray
    end_pair: np.ndarray
    end_amp: np.ndarray
    end_S: np.ndarray
    end_mu: np.ndarray
    end_sp: np.ndarray
    end_spp: np.ndarray
    end_u0: np.ndarray
    min_abs: np.ndarray


def _build_batch(pairs: list[FilamentPair], det: Detector) -> _PairBatch:
    node_pair, node_amp, node_S, node_mu = [], [], [], []
    ends = []
    min_abs = np.full(len(pairs), math.inf)
    for idx, pair in enumerate(pairs):
        n = len(pair)
        if n == 0:
            continue
        min_abs[idx] = float(np.abs(pair.actions).min())
        sym = det.weyl_symbol(pair.eta[:, 0], pair.eta[:, 1])
        node_pair.append(np.full(n, idx))
        node_amp.append(2.0 * pair.weights * sym * pair.measures)
        node_S.append(pair.actions)
        node_mu.append(np.full(n, float(pair.mu)))
        if n < 3:
            continue
        s = pair.eta_s
        S = pair.actions
        dm, dth = det.displacements(pair.eta[:, 0], pair.eta[:, 1])
        for is_open, (i0, i1, i2) in (
            (pair.ends_open[0], (0, 1, 2)),
            (pair.ends_open[1], (n - 1, n - 2, n - 3)),
        ):
            if not is_open:
                continue
            h1 = abs(s[i1] - s[i0])
            h2 = abs(s[i2] - s[i1])
            if h1 == 0.0 or h2 == 0.0:
                continue
            # derivatives along the outward ray u >= 0 (data lies at u < 0)
            sp = (S[i0] - S[i1]) / h1
            spp = 2.0 * ((S[i2] - S[i1]) / h2 - (S[i1] - S[i0]) / h1) / (h1 + h2)
            tx = (dm[i0] - dm[i1]) / h1
            ty = (dth[i0] - dth[i1]) / h1
            u0 = -(dm[i0] * tx + dth[i0] * ty)
            amp = 2.0 * pair.measures[i0] * sym[i0]
            ends.append((idx, amp, S[i0], float(pair.mu), sp, spp, u0))
    if node_pair:
        node_pair = np.concatenate(node_pair)
        node_amp = np.concatenate(node_amp)
        node_S = np.concatenate(node_S)
        node_mu = np.concatenate(node_mu)
    else:
        node_pair = np.empty(0, dtype=int)
        node_amp = node_S = node_mu = np.empty(0)
    end_arr = np.array(ends, dtype=float).reshape(-1, 7)
    return _PairBatch(
        n_pairs=len(pairs),
        sig2=det.sigma * det.sigma,
        node_pair=node_pair.astype(np.intp),
        node_amp=node_amp,
        node_S=node_S,
        node_mu=node_mu,
        end_pair=end_arr[:, 0].astype(np.intp),
        end_amp=end_arr[:, 1],
        end_S=end_arr[:, 2],
        end_mu=end_arr[:, 3],
        end_sp=end_arr[:, 4],
        end_spp=end_arr[:, 5],
        end_u0=end_arr[:, 6],
        min_abs=min_abs,
    )


def _batch_contributions(
    batch: _PairBatch, hbar: float, pair_mask: np.ndarray | None = None
) -> np.ndarray:
    """Per-pair interference contributions at one hbar.

    The trapezoid term sums amp*cos(S/hbar + mu*pi/2) per pair.  Each
    open data end adds the analytic tail of the integral beyond the
    traced points: with the symbol continued as an exact Gaussian along
    the outward ray, the density frozen and the action quadratic, the
    tail is amp * Re[e^{i arg} * I] with the half-line Gauss-Fresnel
    integral I = (1/2) sqrt(pi/a) erfcx(-b / (2 sqrt(a))) for
    a = 1/(2 sigma^2) - i S''/(2 hbar), b = u0/sigma^2 + i S'/hbar.
    With ``pair_mask`` only rows of selected pairs are evaluated.
    """
    node_rows = slice(None) if pair_mask is None else pair_mask[batch.node_pair]
    arg = batch.node_S[node_rows] / hbar + batch.node_mu[node_rows] * (math.pi / 2.0)
    out = np.bincount(
        batch.node_pair[node_rows],
        batch.node_amp[node_rows] * np.cos(arg),
        minlength=batch.n_pairs,
    )
    end_rows = slice(None) if pair_mask is None else pair_mask[batch.end_pair]
    if len(batch.end_pair[end_rows]):
        a = 0.5 / batch.sig2 - 0.5j * batch.end_spp[end_rows] / hbar
        b = batch.end_u0[end_rows] / batch.sig2 + 1j * batch.end_sp[end_rows] / hbar
        ra = np.sqrt(a)
        half_line = 0.5 * np.sqrt(np.pi / a) * erfcx(-b / (2.0 * ra))
        targ = batch.end_S[end_rows] / hbar + batch.end_mu[end_rows] * (math.pi / 2.0)
        tails = batch.end_amp[end_rows] * (np.exp(1j * targ) * half_line).real
        out = out + np.bincount(
            batch.end_pair[end_rows], tails, minlength=batch.n_pairs
        )
    return out


def _pair_contribution(pair: FilamentPair, det: Detector, hbar: float) -> float:
    """Interference contribution of a single pair (batch of one)."""
    return float(_batch_contributions(_build_batch([pair], det), hbar)[0])


def _smv_from_batch(
    twa: float,
    pairs: list[FilamentPair],
    batch: _PairBatch,
    n_filaments: int,
    hbar: float,
    prune: PruneConfig,
) -> SmvResult:
    if prune.mode is PruneMode.ACTION_THRESHOLD:
        kept = batch.min_abs <= prune.c_prune * hbar
        contributions = _batch_contributions(batch, hbar, pair_mask=kept)
        pruned = int((~kept).sum())
    else:
        contributions = _batch_contributions(batch, hbar)
        pruned = 0
    interference = math.fsum(contributions)
    return SmvResult(
        twa=twa,
        interference=interference,
        smv=twa + interference,
        n_filaments=n_filaments,
        n_pairs=len(pairs),
        n_pruned=pruned,
        pair_plus=np.array([p.plus for p in pairs], dtype=int),
        pair_minus=np.array([p.minus for p in pairs], dtype=int),
        pair_contribution=contributions,
        pair_min_abs_action=batch.min_abs,
        pair_mu=np.array([p.mu for p in pairs], dtype=int),
    )


def smv_mean(
    filaments: list[Filament],
    det: Detector,
    hbar: float,
    K: int = 64,
    prune: PruneConfig | None = None,
) -> SmvResult:
    """Classical mean plus the pairwise filament-interference correction.

    ``filaments`` are the tracer's output; fingers are split and every
    piece resampled to K nodes before pairing.  With threshold pruning a
    pair is evaluated only when its smallest |S| is at most c_prune*hbar.
    Contributions are summed with math.fsum in pair order, so the result
    is independent of execution environment.
    """
    if hbar <= 0.0:
        raise ValueError(f"hbar must be positive, got {hbar}")
    prune = prune or PruneConfig()
    twa = twa_mean(filaments, det)
    pieces = split_all_fingers(filaments)
    pairs = pair_filaments(pieces, K, det)
    batch = _build_batch(pairs, det)
    return _smv_from_batch(twa, pairs, batch, len(pieces), hbar, prune)


def calibrate_prune(
    filaments: list[Filament],
    det: Detector,
    hbar: float,
    K: int = 64,
    start: float = 10.0 * math.pi,
    rel_tol: float = 1e-3,
    max_doublings: int = 30,
) -> PruneConfig:
    """Smallest power-of-two multiple of ``start`` matching the full sum.

    Doubles c_prune until the pruned mean agrees with the full mean to
    ``rel_tol`` relative; raises if the budget is exhausted.
    """
    full = smv_mean(filaments, det, hbar, K, PruneConfig())
    scale = max(abs(full.smv), 1e-300)
    c = start
    for _ in range(max_doublings):
        cfg = PruneConfig(PruneMode.ACTION_THRESHOLD, c)
        got = smv_mean(filaments, det, hbar, K, cfg)
        if abs(got.smv - full.smv) <= rel_tol * scale:
            logger.info(
                "prune threshold calibrated: c = %.6g (%d of %d pairs pruned)",
                c,
                got.n_pruned,
                got.n_pairs,
            )
            return cfg
        c *= 2.0
    raise RuntimeError(
        f"pruning calibration did not converge within {max_doublings} doublings"
    )
