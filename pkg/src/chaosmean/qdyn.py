"""Quantum split-step propagation of the kicked maps.

States live on an N-point angle grid (theta_s = theta0 + s*2pi/N) with the
conjugate momentum lattice m_j = j*hbar, j = -N/2 .. N/2-1. Angle-representation
amplitudes are samples of the wavefunction psi(theta_s), normalized under the
quadrature weight 2pi/N; momentum-representation amplitudes are the plane-wave
coefficients c_j with unit counting norm. Both norms coincide and are preserved
exactly by the transforms.

One kick of the rotor applies exp(+i alpha sin(theta)/hbar) in the angle
representation followed by exp(+i alpha m^2 / 2 hbar) in the momentum
representation; the Harper kick applies exp(-i alpha cos(theta)/hbar) followed
by exp(-i alpha cos(phi)/hbar). Each factor is diagonal in its representation,
so the scheme is exactly unitary and reproduces the classical maps of
:mod:`chaosmean.maps` in the small-hbar limit.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .maps import MapKind, MapParams

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

LEAK_WARN = 1e-12
_EDGE_SITES = 8

__all__ = [
    "QuantumGrid",
    "StateVector",
    "build_grid",
    "plane_wave",
    "to_momentum",
    "to_angle",
    "in_rep",
    "norm",
    "split_step_kick",
    "evolve",
    "edge_leak",
    "save_state",
    "load_state",
]


@dataclass(frozen=True)
class QuantumGrid:
    """Conjugate angle/momentum grids for an N-dimensional truncation."""

    N: int
    hbar: float
    kind: MapKind
    thetas: np.ndarray
    momenta: np.ndarray

    @property
    def dtheta(self) -> float:
        return TWO_PI / self.N

    @property
    def theta0(self) -> float:
        return float(self.thetas[0])

    @property
    def j_indices(self) -> np.ndarray:
        return np.arange(-(self.N // 2), self.N // 2)

    @property
    def m_max(self) -> float:
        """Half-width N*hbar/2 of the momentum window [-m_max, m_max)."""
        return 0.5 * self.N * self.hbar


def build_grid(N: int, hbar: float, kind: MapKind | str = MapKind.KICKED_ROTOR) -> QuantumGrid:
    """Build the angle/momentum grids.

    Rotor grids require N to be a power of two and place theta in [0, 2pi);
    Harper grids require N divisible by 4 with hbar = 2pi/N exactly and place
    both coordinates in [-pi, pi).
    """
    kind = MapKind(kind)
    if N <= 0 or N % 2:
        raise ValueError(f"N must be positive and even, got {N}")
    if hbar <= 0:
        raise ValueError(f"hbar must be positive, got {hbar}")
    if kind is MapKind.KICKED_ROTOR:
        if N & (N - 1):
            raise ValueError(f"rotor grids need N a power of two, got {N}")
        theta0 = 0.0
    else:
        if N % 4:
            raise ValueError(f"Harper grids need N divisible by 4, got {N}")
        if abs(N * hbar - TWO_PI) > 1e-12 * TWO_PI:
            raise ValueError(f"Harper grids need hbar = 2pi/N, got N*hbar = {N * hbar!r}")
        theta0 = -math.pi
    j = np.arange(-(N // 2), N // 2)
    thetas = theta0 + TWO_PI * np.arange(N) / N
    momenta = j * hbar
    thetas.flags.writeable = False
    momenta.flags.writeable = False
    return QuantumGrid(N=N, hbar=hbar, kind=kind, thetas=thetas, momenta=momenta)


@dataclass(frozen=True)
class StateVector:
    """Wavefunction samples in one representation ("angle" or "momentum")."""

    grid: QuantumGrid
    rep: str
    amps: np.ndarray
    k: int = 0
    alpha: float = float("nan")

    def __post_init__(self):
        if self.rep not in ("angle", "momentum"):
            raise ValueError(f"rep must be 'angle' or 'momentum', got {self.rep!r}")
        if self.amps.shape != (self.grid.N,):
            raise ValueError("amplitude array does not match grid size")
        self.amps.flags.writeable = False


def plane_wave(grid: QuantumGrid, P0: float) -> StateVector:
    """Momentum eigenstate exp(+i P0 theta / hbar)/sqrt(2pi) on the angle grid.

    P0 must sit on the momentum lattice (P0 = n0*hbar with integer n0 inside
    the window); the phase is built from the integer n0 so it stays exact for
    large theta arguments.
    """
    n0f = P0 / grid.hbar
    n0 = round(n0f)
    if abs(n0f - n0) > 1e-8:
        raise ValueError(f"P0 = {P0} is not a lattice momentum (P0/hbar = {n0f})")
    if not (-grid.N // 2 <= n0 < grid.N // 2):
        raise ValueError(f"P0 = {P0} outside the momentum window (n0 = {n0})")
    amps = np.exp(1j * n0 * grid.thetas) / math.sqrt(TWO_PI)
    return StateVector(grid=grid, rep="angle", amps=amps)


def norm(state: StateVector) -> float:
    """Representation-independent L2 norm."""
    s = float(np.sum(np.abs(state.amps) ** 2))
    if state.rep == "angle":
        s *= state.grid.dtheta
    return math.sqrt(s)


def to_momentum(state: StateVector) -> StateVector:
    """Angle -> momentum transform; c_j = (2pi/N)/sqrt(2pi) sum_s psi_s e^{-i j theta_s}."""
    if state.rep == "momentum":
        return state
    g = state.grid
    raw = np.fft.fftshift(np.fft.fft(state.amps))
    c = (math.sqrt(TWO_PI) / g.N) * raw
    if g.theta0 != 0.0:
        c = c * np.exp(-1j * g.j_indices * g.theta0)
    return replace(state, rep="momentum", amps=c)


def to_angle(state: StateVector) -> StateVector:
    """Momentum -> angle transform; psi_s = (1/sqrt(2pi)) sum_j c_j e^{i j theta_s}."""
    if state.rep == "angle":
        return state
    g = state.grid
    c = state.amps
    if g.theta0 != 0.0:
        c = c * np.exp(1j * g.j_indices * g.theta0)
    amps = np.fft.ifft(np.fft.ifftshift(c)) * (g.N / math.sqrt(TWO_PI))
    return replace(state, rep="angle", amps=amps)


def in_rep(state: StateVector, rep: str) -> StateVector:
    return to_momentum(state) if rep == "momentum" else to_angle(state)


def _phase_tables(grid: QuantumGrid, params: MapParams):
    a = params.alpha
    if params.kind is MapKind.KICKED_ROTOR:
        kick = np.exp(1j * (a / grid.hbar) * np.sin(grid.thetas))
        free = np.exp(1j * 0.5 * a * grid.hbar * (grid.j_indices.astype(float) ** 2))
    else:
        kick = np.exp(-1j * (a / grid.hbar) * np.cos(grid.thetas))
        free = np.exp(-1j * (a / grid.hbar) * np.cos(grid.momenta))
    return kick, free


def split_step_kick(state: StateVector, params: MapParams) -> StateVector:
    """Apply one kick; returns the new state in the angle representation."""
    if params.kind is not state.grid.kind:
        raise ValueError("map kind does not match the state's grid")
    kick, free = _phase_tables(state.grid, params)
    return _apply_kicks(state, params, 1, kick, free)


def _apply_kicks(state, params, k, kick, free):
    g = state.grid
    psi = to_angle(state).amps
    phase_in = None
    phase_out = None
    if g.theta0 != 0.0:
        phase_in = np.exp(-1j * g.j_indices * g.theta0)
        phase_out = np.conj(phase_in)
    scale_fwd = math.sqrt(TWO_PI) / g.N
    scale_bwd = g.N / math.sqrt(TWO_PI)
    for _ in range(k):
        psi = psi * kick
        c = np.fft.fftshift(np.fft.fft(psi)) * scale_fwd
        if phase_in is not None:
            c *= phase_in
        c *= free
        if phase_out is not None:
            c = c * phase_out
        psi = np.fft.ifft(np.fft.ifftshift(c)) * scale_bwd
    return StateVector(grid=g, rep="angle", amps=psi, k=state.k + k, alpha=params.alpha)


def evolve(state: StateVector, params: MapParams, k: int) -> StateVector:
    """Apply k kicks, warning on norm drift and on momentum-edge leakage.

    The edge-leak diagnostic (population within 8 lattice sites of either
    momentum edge) flags a momentum window too small to contain the state;
    results past that point are aliased and unreliable.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    kick, free = _phase_tables(state.grid, params)
    n0 = norm(state)
    out = _apply_kicks(state, params, k, kick, free)
    drift = abs(norm(out) - n0)
    if drift > 1e-12:
        logger.warning("norm drift %.3e after %d kicks", drift, k)
    leak = edge_leak(out)
    if leak > LEAK_WARN:
        logger.warning(
            "momentum-edge population %.3e exceeds %.0e after %d kicks (N=%d too small?)",
            leak,
            LEAK_WARN,
            k,
            state.grid.N,
        )
    return out


def edge_leak(state: StateVector) -> float:
    """Population within 8 lattice sites of either momentum edge.

    Zero for Harper grids: the torus momentum space is exactly periodic, so
    the finite lattice is not a truncation there.
    """
    if state.grid.kind is MapKind.KICKED_HARPER:
        return 0.0
    c = to_momentum(state).amps
    w = min(_EDGE_SITES, state.grid.N // 2)
    p = np.abs(c) ** 2
    return float(np.sum(p[:w]) + np.sum(p[-w:]))


def momentum_moments(state: StateVector) -> tuple[float, float]:
    """Mean and variance of momentum in the lattice eigenbasis."""
    c = to_momentum(state)
    p = np.abs(c.amps) ** 2
    p = p / p.sum()
    m = c.grid.momenta
    mean = float(np.dot(p, m))
    var = float(np.dot(p, (m - mean) ** 2))
    return mean, var


def angle_density(state: StateVector) -> np.ndarray:
    """|psi(theta)|^2 on the angle grid; integrates to one with dtheta weights."""
    return np.abs(to_angle(state).amps) ** 2


# ---------------------------------------------------------------------------
# serialization: one JSON header line, then 2N little-endian float64
# (interleaved re/im)


def save_state(state: StateVector, path) -> None:
    header = {
        "N": state.grid.N,
        "hbar": state.grid.hbar,
        "rep": state.rep,
        "kind": state.grid.kind.value,
        "k": state.k,
        "alpha": None if math.isnan(state.alpha) else state.alpha,
    }
    buf = np.empty(2 * state.grid.N)
    buf[0::2] = state.amps.real
    buf[1::2] = state.amps.imag
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(buf.astype("<f8").tobytes())


def load_state(path) -> StateVector:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    N = header["N"]
    if raw.size != 2 * N:
        raise ValueError(f"expected {2 * N} float64 payload values, found {raw.size}")
    grid = build_grid(N, header["hbar"], MapKind(header["kind"]))
    amps = raw[0::2] + 1j * raw[1::2]
    alpha = header.get("alpha")
    return StateVector(
        grid=grid,
        rep=header["rep"],
        amps=amps,
        k=header.get("k", 0),
        alpha=float("nan") if alpha is None else alpha,
    )
