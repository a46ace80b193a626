import math

import numpy as np
import pytest

from chaosmean.maps import MapKind, MapParams
from chaosmean.qdyn import build_grid, evolve, plane_wave, to_angle, to_momentum
from chaosmean.wigner import (
    Detector,
    detector_matrix,
    detector_matrix_momentum,
    detector_mean,
    detector_mean_wigner,
    load_wigner,
    mean_angle_rep,
    mean_phase_space,
    operator_weyl_symbol,
    phase_space_trace,
    save_wigner,
    save_wigner_csv,
    weyl_detector,
    wigner_cylinder,
)

ROTOR06 = MapParams(MapKind.KICKED_ROTOR, 0.6)
HARPER10 = MapParams(MapKind.KICKED_HARPER, 1.0)

# closed forms at sigma = 0.088 (and hbar = 0.006 for the kernel diagonal)
DIAG_MOMENTUM = 0.72151859016182929  # (2pi)^{-3/2}/sigma
DIAG_KERNEL = 120.25309836030486  # 1/((2pi)^{3/2} hbar sigma)
WEYL_CENTER = 20.552032940585661  # 1/(2pi sigma^2)


def _random_state(grid, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=grid.N) + 1j * rng.normal(size=grid.N)
    c /= np.linalg.norm(c)
    from chaosmean.qdyn import StateVector

    return to_angle(StateVector(grid, "momentum", c))


def test_detector_validation():
    with pytest.raises(ValueError):
        Detector(0.0, 0.0, -1.0)
    with pytest.raises(ValueError):
        Detector(0.0, 0.0, 0.1, cutoff=0.25)  # below 3 sigma
    d = Detector(1.0, 2.0, 0.1)
    assert d.radius == pytest.approx(0.4)
    assert d.center.p == 1.0 and d.center.theta == 2.0


def test_weyl_detector_frozen_values():
    det = Detector(3.0, 2.0, 0.088)
    assert weyl_detector(det, 3.0, 2.0) == pytest.approx(WEYL_CENTER, rel=1e-14)
    # radial offset of 4 sigma in momentum suppresses by e^{-8}
    off = weyl_detector(det, 3.0 + 4 * 0.088, 2.0)
    assert off == pytest.approx(WEYL_CENTER * math.exp(-8.0), rel=1e-12)
    # angle displacement wraps
    a = weyl_detector(det, 3.0, 2.0 + 2 * math.pi - 0.01)
    b = weyl_detector(det, 3.0, 2.0 - 0.01)
    assert a == pytest.approx(b, rel=1e-12)


def test_weyl_detector_normalized():
    det = Detector(0.0, 3.0, 0.2)
    m = np.linspace(-3, 3, 4001)
    th = np.linspace(3.0 - math.pi, 3.0 + math.pi, 4001, endpoint=False)
    vals = det.weyl_symbol(m[:, None], th[None, :])
    integral = vals.sum() * (m[1] - m[0]) * (th[1] - th[0])
    assert integral == pytest.approx(1.0, abs=1e-6)


def test_in_disk_wraps_both_ways():
    det = Detector(3.0, 0.05, 0.1)
    assert det.in_disk(3.0, 2 * math.pi - 0.05)
    assert not det.in_disk(3.0, 1.0)
    dh = Detector(-3.0, 0.0, 0.1, kind=MapKind.KICKED_HARPER)
    assert dh.in_disk(math.pi - 0.2, 0.0)  # wrapped momentum distance


def test_plane_wave_wigner_row():
    g = build_grid(2**6, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    w = wigner_cylinder(plane_wave(g, 0.3))
    # momentum 0.3 sits at half-step row index N + 2*j0 where j0*hbar = 0.3
    j0 = int(round(0.3 / g.hbar))
    idx = g.N + 2 * j0
    assert np.allclose(w.values[idx], 1.0 / (2 * math.pi * g.hbar), atol=1e-12 / g.hbar)
    others = np.delete(np.arange(2 * g.N), idx)
    assert np.abs(w.values[others]).max() < 1e-12 / g.hbar
    assert w.total_mass() == pytest.approx(1.0, abs=1e-12)


def test_two_mode_interference_row():
    from chaosmean.qdyn import StateVector

    g = build_grid(2**6, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    c = np.zeros(g.N, dtype=complex)
    j0 = 10
    i0 = g.N // 2 + j0
    c[i0] = c[i0 + 2] = 1.0 / math.sqrt(2.0)
    w = wigner_cylinder(to_angle(StateVector(g, "momentum", c)))
    mid = g.N + 2 * j0 + 2  # row at momentum (j0+1)*hbar
    expect = np.cos(2.0 * w.thetas) / (2 * math.pi * g.hbar)
    assert np.allclose(w.values[mid], expect, atol=1e-10 / g.hbar)
    for row in (g.N + 2 * j0, g.N + 2 * j0 + 4):
        assert np.allclose(w.values[row], 0.5 / (2 * math.pi * g.hbar), atol=1e-10 / g.hbar)


def test_marginals_random_state():
    g = build_grid(2**6, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    psi = _random_state(g, 3)
    w = wigner_cylinder(psi)
    c = to_momentum(psi).amps
    mm = w.momentum_marginal()
    assert np.allclose(mm[0::2], np.abs(c) ** 2, atol=1e-10)
    assert np.abs(mm[1::2]).max() < 1e-12
    # angle marginal lives on the doubled grid; synthesize |psi|^2 there
    j = g.j_indices
    psi2 = np.exp(1j * np.outer(w.thetas, j)) @ c / math.sqrt(2 * math.pi)
    assert np.allclose(w.angle_marginal(), np.abs(psi2) ** 2, atol=1e-10)
    assert w.total_mass() == pytest.approx(1.0, abs=1e-10)


def test_wigner_rejects_momentum_rep():
    g = build_grid(2**5, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    c = to_momentum(plane_wave(g, 0.0))
    with pytest.raises(ValueError):
        wigner_cylinder(c)
    det = Detector(0.0, 1.0, 0.2)
    with pytest.raises(ValueError):
        mean_angle_rep(c, det)


def test_state_symbol_matches_projector_symbol():
    g = build_grid(2**5, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    psi = _random_state(g, 11)
    c = to_momentum(psi).amps
    w = wigner_cylinder(psi)
    sym = operator_weyl_symbol(np.outer(c, np.conj(c)), g)
    assert np.allclose(w.values, sym / (2 * math.pi * g.hbar), atol=1e-12)


def test_trace_identity_random_operators():
    rng = np.random.default_rng(0)
    for kind, N, hbar in (
        (MapKind.KICKED_ROTOR, 32, 3.0 / 100.0),
        (MapKind.KICKED_ROTOR, 64, 3.0 / 100.0),
        (MapKind.KICKED_HARPER, 32, 2 * math.pi / 32),
    ):
        g = build_grid(N, hbar, kind)
        A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        A = A + A.conj().T
        B = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        B = B + B.conj().T
        sa = operator_weyl_symbol(A, g)
        sb = operator_weyl_symbol(B, g)
        got = phase_space_trace(sa, sb, 2 * math.pi / sa.shape[1])
        want = float(np.real(np.trace(A @ B)))
        assert got == pytest.approx(want, rel=1e-10)


def test_expectation_from_symbols_is_exact():
    g = build_grid(2**5, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    psi = _random_state(g, 21)
    c = to_momentum(psi).amps
    det = Detector(0.3, 2.0, 0.2)
    O = detector_matrix_momentum(det, g)
    want = float(np.real(np.conj(c) @ O @ c))
    sym = operator_weyl_symbol(O, g)
    w = wigner_cylinder(psi)
    got = g.hbar * np.sum(sym * w.values) * w.dtheta
    assert got == pytest.approx(want, rel=1e-12)
    assert detector_mean_wigner(psi, det) == pytest.approx(want, rel=1e-12)
    assert detector_mean(psi, det) == pytest.approx(want, rel=1e-12)


def test_detector_kernel_frozen_values():
    det = Detector(3.0, 2.0, 0.088)
    hbar = 0.006
    diag = detector_matrix(det, 2.0, 2.0, hbar)
    assert complex(diag).imag == pytest.approx(0.0, abs=1e-12)
    assert complex(diag).real == pytest.approx(DIAG_KERNEL, rel=1e-12)
    v = 6 * hbar / det.sigma
    off = detector_matrix(det, 2.0 - v / 2, 2.0 + v / 2, hbar)
    assert abs(complex(off)) == pytest.approx(DIAG_KERNEL * math.exp(-18.0), rel=1e-9)
    a = detector_matrix(det, 1.9, 2.05, hbar)
    b = detector_matrix(det, 2.05, 1.9, hbar)
    assert complex(a) == pytest.approx(complex(b).conjugate(), rel=1e-12)


def test_mean_routes_plane_wave_frozen():
    g = build_grid(2**10, 3.0 / 500.0, MapKind.KICKED_ROTOR)
    det = Detector(3.0, 2.0, 0.088)
    psi = plane_wave(g, 3.0)
    assert detector_mean(psi, det) == pytest.approx(DIAG_MOMENTUM, rel=1e-12)
    assert mean_phase_space(psi, det) == pytest.approx(DIAG_MOMENTUM, rel=1e-10)
    assert mean_angle_rep(psi, det) == pytest.approx(DIAG_MOMENTUM, rel=1e-6)


def test_mean_routes_evolved_state():
    g = build_grid(2**9, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    # a point on the twice-kicked image of the m = 3 line
    m1 = 3.0 + 0.6 * math.cos(0.0)
    t1 = -0.6 * m1
    m2 = m1 + 0.6 * math.cos(t1)
    t2 = t1 - 0.6 * m2
    det = Detector(m2, t2, 0.088)
    psi = evolve(plane_wave(g, 3.0), ROTOR06, 2)
    psi = to_angle(psi)
    c = to_momentum(psi).amps
    want = float(np.real(np.conj(c) @ detector_matrix_momentum(det, g) @ c))
    assert want > 0.1  # detector actually sees the state
    assert detector_mean(psi, det) == pytest.approx(want, rel=1e-12)
    assert detector_mean_wigner(psi, det) == pytest.approx(want, rel=1e-12)
    assert mean_phase_space(psi, det) == pytest.approx(want, rel=1e-7)
    assert mean_angle_rep(psi, det) == pytest.approx(want, rel=1e-6)
    # enlarging the quadrature windows moves the result by < 1e-9
    w6 = mean_angle_rep(psi, det, half_width=6.0)
    w8 = mean_angle_rep(psi, det, half_width=8.0)
    assert abs(w8 - w6) < 1e-9


def test_mean_angle_rep_against_untruncated_sum():
    g = build_grid(2**6, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    psi = _random_state(g, 5)
    det = Detector(0.2, 3.0, 0.15)
    # brute force: full double sum with no windows, seam kept away from theta_c
    from chaosmean.maps import wrap_pm_pi

    u = wrap_pm_pi(g.thetas - det.theta_c)
    th1 = u[:, None] + det.theta_c
    th2 = u[None, :] + det.theta_c
    kern = detector_matrix(det, th1, th2, g.hbar)
    brute = float(np.real(psi.amps @ kern @ np.conj(psi.amps)) * g.dtheta**2)
    got = mean_angle_rep(psi, det)
    assert got == pytest.approx(brute, abs=1e-8)


def test_mean_routes_harper():
    g = build_grid(64, 2 * math.pi / 64, MapKind.KICKED_HARPER)
    det = Detector(0.5, -3.0, 0.3, kind=MapKind.KICKED_HARPER)
    psi = to_angle(evolve(plane_wave(g, 0.0), HARPER10, 3))
    c = to_momentum(psi).amps
    want = float(np.real(np.conj(c) @ detector_matrix_momentum(det, g) @ c))
    assert detector_mean(psi, det) == pytest.approx(want, rel=1e-12)
    assert detector_mean_wigner(psi, det) == pytest.approx(want, rel=1e-12)
    assert mean_phase_space(psi, det) == pytest.approx(want, rel=1e-10)
    assert mean_angle_rep(psi, det) == pytest.approx(want, rel=1e-6)


def test_qm_regression_fixture_k200():
    # long-evolution expectation value used as the quantum baseline elsewhere;
    # value frozen from this implementation and stable to FFT rounding
    g = build_grid(2**13, 3.0 / 500.0, MapKind.KICKED_ROTOR)
    det = Detector(3.0, 2.0, 0.088)
    psi = evolve(plane_wave(g, 3.0), ROTOR06, 200)
    val = detector_mean(psi, det)
    assert val == pytest.approx(0.03106024132302811, rel=1e-9)


def test_wigner_io_round_trip(tmp_path):
    g = build_grid(2**5, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    w = wigner_cylinder(_random_state(g, 9))
    p = tmp_path / "w.bin"
    save_wigner(w, p)
    back = load_wigner(p)
    assert back.hbar == w.hbar and back.kind is w.kind
    assert np.array_equal(back.values, w.values)
    assert np.array_equal(back.momenta, w.momenta)

    q = tmp_path / "w.csv"
    save_wigner_csv(w, q)
    lines = q.read_text().splitlines()
    assert lines[0] == "m,theta,value"
    assert len(lines) == 1 + w.values.size
    m0, t0, v0 = (float(x) for x in lines[1].split(","))
    assert m0 == w.momenta[0] and t0 == w.thetas[0] and v0 == w.values[0, 0]


def test_integer_table_shape():
    g = build_grid(2**5, 3.0 / 100.0, MapKind.KICKED_ROTOR)
    w = wigner_cylinder(plane_wave(g, 0.0))
    table = w.integer_table()
    assert table.shape == (g.N, g.N)
    j0 = g.N // 2  # row of m = 0 within the integer table
    assert np.allclose(table[j0], 1.0 / (2 * math.pi * g.hbar))
