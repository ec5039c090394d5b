import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from rismimo.channel import (
    ChannelMatrix,
    LinkGeometry,
    RxAntennaConfig,
    aggregate_halves,
    beamforming_matrix,
    channel_matrix,
    flat_fading_transmit,
    free_space_channel,
    link_geometry,
    link_table,
    load_channel_csv,
    load_positions_csv,
    random_channel,
    received_signal_theorem1,
    save_channel_csv,
)
from rismimo.errors import DomainError, ShapeError
from rismimo.ris_core import RisGeometry, cosine_pattern, isotropic_pattern

from oracles import C, efield_received

finite = dict(allow_nan=False, allow_infinity=False)


def iso_geom(rows=1, cols=1, f=3e9, cell=None, gain=1.0):
    lam = C / f
    cell = cell or lam / 2
    return RisGeometry(rows, cols, cell, cell, f, gain, isotropic_pattern)


def boresight(d):
    return LinkGeometry(d, (0.0, 0.0), (0.0, 0.0))


def test_one_wavelength_boresight():
    g = iso_geom()
    h = free_space_channel(g, (0, 0), RxAntennaConfig(1.0, (0, 0, 1)), boresight(g.wavelength))
    assert_allclose(h, 1 / (4 * np.pi), rtol=1e-12, atol=1e-15)


def test_doubling_distance():
    g = iso_geom()
    rx = RxAntennaConfig(1.0, (0, 0, 1))
    d = 0.731
    h1 = free_space_channel(g, (0, 0), rx, boresight(d))
    h2 = free_space_channel(g, (0, 0), rx, boresight(2 * d))
    assert abs(h2) == pytest.approx(abs(h1) / 2, rel=1e-14)
    expected = np.angle(h1) - 2 * np.pi * d / g.wavelength
    assert abs(np.angle(h2 * np.exp(-1j * expected))) < 1e-9


def test_link_budget_in_decibels():
    # 4.25 GHz, 1.5 m, 9 dBi cell and 7.4 dBi receiver, evaluated in dB form
    f, d = 4.25e9, 1.5
    lam = C / f
    assert lam == pytest.approx(0.070539, abs=1e-6)
    g = RisGeometry(1, 1, 0.01, 0.01, f, 10**0.9, isotropic_pattern)
    h = free_space_channel(g, (0, 0), RxAntennaConfig(10**0.74, (0, 0, d)), boresight(d))
    gain_db = 9.0 + 7.4 + 20 * np.log10(lam / (4 * np.pi * d))
    assert 20 * np.log10(abs(h)) == pytest.approx(gain_db, abs=1e-10)
    # 10**(16.4/20) * 0.070539 / (4*pi*1.5) = 6.6069 * 3.7422e-3
    assert abs(h) == pytest.approx(2.4724e-2, rel=1e-4)


def test_zero_distance_rejected():
    g = iso_geom()
    with pytest.raises(DomainError):
        LinkGeometry(0.0, (0, 0), (0, 0))
    with pytest.raises(DomainError):
        link_geometry((0, 0, 0), RxAntennaConfig(1.0, (0, 0, 0), boresight=(0, 0, 1)))
    bad = LinkGeometry.__new__(LinkGeometry)
    object.__setattr__(bad, "distance", 0.0)
    object.__setattr__(bad, "aod", (0.0, 0.0))
    object.__setattr__(bad, "aoa", (0.0, 0.0))
    with pytest.raises(DomainError):
        free_space_channel(g, (0, 0), RxAntennaConfig(1.0, (0, 0, 1)), bad)


def test_geometry_angles_on_axis():
    lk = link_geometry((0, 0, 0), RxAntennaConfig(1.0, (0, 0, 3.0)))
    assert lk.distance == pytest.approx(3.0)
    assert lk.aod[0] == pytest.approx(0.0, abs=1e-12)
    assert lk.aoa[0] == pytest.approx(0.0, abs=1e-12)


def test_geometry_angles_off_axis():
    lk = link_geometry((0, 0, 0), RxAntennaConfig(1.0, (1.0, 0, 1.0), boresight=(0, 0, -1)))
    assert lk.aod[0] == pytest.approx(np.pi / 4)
    assert lk.aoa[0] == pytest.approx(np.pi / 4)
    assert 0 <= lk.aod[1] < 2 * np.pi


def test_single_cell_received_signal():
    g = iso_geom()
    rx = RxAntennaConfig(1.0, (0.2, -0.1, 2.0))
    y = received_signal_theorem1(g, np.ones((1, 1)), [rx], flux=3.0)
    h = free_space_channel(g, (0, 0), rx)
    assert_allclose(y[0], h * np.sqrt(3.0 * g.cell_area), rtol=1e-13)


def test_equidistant_cells_add_coherently():
    g = iso_geom(3, 4)
    rx = RxAntennaConfig(1.0, (0, 0, 5.0))
    links = [[[boresight(2.5) for _ in range(4)] for _ in range(3)]]
    y = received_signal_theorem1(g, np.full((3, 4), 0.8j), [rx], 1.0, links)
    single = free_space_channel(g, (0, 0), rx, boresight(2.5)) * np.sqrt(g.cell_area) * 0.8j
    assert_allclose(y[0], 12 * single, rtol=1e-13)


def test_received_signal_against_field_oracle():
    rng = np.random.default_rng(3)
    g = RisGeometry(2, 2, 0.021, 0.017, 5.8e9, 2.5, isotropic_pattern)
    gamma = rng.uniform(0.3, 1, (2, 2)) * np.exp(1j * rng.uniform(0, 2 * np.pi, (2, 2)))
    rx_list = [RxAntennaConfig(1.7, tuple(rng.uniform(-1, 1, 2)) + (rng.uniform(0.5, 3),)) for _ in range(2)]
    y = received_signal_theorem1(g, gamma, rx_list, flux=4.0)
    pos = g.cell_positions().reshape(-1, 3)
    for k, rx in enumerate(rx_list):
        ref = efield_received(pos, gamma.reshape(-1), rx.position, g.wavelength, 2.5, 1.7, 4.0, g.cell_area)
        assert_allclose(y[k], ref, rtol=1e-12)


def test_received_signal_shape_checks():
    g = iso_geom(2, 2)
    rx = RxAntennaConfig(1.0, (0, 0, 1))
    with pytest.raises(ShapeError):
        received_signal_theorem1(g, np.ones((2, 3)), [rx], 1.0)
    with pytest.raises(ShapeError):
        received_signal_theorem1(g, np.ones((2, 2)), [rx], 1.0, links=[[[boresight(1.0)] * 2]])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25)
def test_received_signal_is_linear(seed):
    rng = np.random.default_rng(seed)
    g = iso_geom(2, 3)
    rx = [RxAntennaConfig(1.0, (0.3, 0.1, 1.2)), RxAntennaConfig(2.0, (-0.2, 0.0, 0.9))]
    a = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    b = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    ya = received_signal_theorem1(g, a, rx, 1.0)
    yb = received_signal_theorem1(g, b, rx, 1.0)
    yab = received_signal_theorem1(g, a + b, rx, 1.0)
    assert np.max(np.abs(yab - ya - yb)) <= 1e-12 * max(1.0, np.max(np.abs(yab)))


def test_halving_amplitude_quarters_power():
    g = iso_geom()
    rx = RxAntennaConfig(1.0, (0, 0, 1.0))
    p1 = abs(received_signal_theorem1(g, np.full((1, 1), 0.9), [rx], 1.0)[0]) ** 2
    p2 = abs(received_signal_theorem1(g, np.full((1, 1), 0.45), [rx], 1.0)[0]) ** 2
    assert p2 == pytest.approx(p1 / 4, rel=1e-12)


def test_swapping_angles_keeps_magnitude_with_equal_patterns():
    g = RisGeometry(1, 1, 0.01, 0.01, 3e9, 1.0, cosine_pattern)
    rx = RxAntennaConfig(1.0, (0, 0, 1), pattern=cosine_pattern)
    lk = LinkGeometry(1.3, (0.4, 1.0), (0.9, 2.0))
    swapped = LinkGeometry(1.3, lk.aoa, lk.aod)
    assert abs(free_space_channel(g, (0, 0), rx, lk)) == pytest.approx(abs(free_space_channel(g, (0, 0), rx, swapped)), rel=1e-14)


def test_channel_matrix_row_major():
    g = iso_geom(2, 3)
    rx = [RxAntennaConfig(1.0, (0.1, 0.2, 1.0))]
    H = channel_matrix(g, rx, flux=2.0)
    assert H.shape == (1, 6)
    assert H.cell_power == pytest.approx(2.0 * g.cell_area)
    for n in range(2):
        for m in range(3):
            assert H.entries[0, n * 3 + m] == pytest.approx(free_space_channel(g, (n, m), rx[0]), rel=1e-13)


def test_channel_matrix_validation():
    with pytest.raises(ShapeError):
        ChannelMatrix(np.array([1.0, np.nan]).reshape(1, 2))
    with pytest.raises(DomainError):
        ChannelMatrix(np.eye(2), flux=0.0)


def test_transmit_identity_noiseless():
    x = np.array([1 + 1j, -2.0])
    assert_allclose(flat_fading_transmit(np.eye(2), x, 4.0, 0.0), 2 * x)


def test_transmit_noise_statistics():
    rng = np.random.default_rng(0)
    y = flat_fading_transmit(np.eye(2), np.zeros((2, 50_000)), 1.0, 0.3, rng).ravel()
    assert np.var(y.real) == pytest.approx(0.15, rel=0.03)
    assert np.var(y.imag) == pytest.approx(0.15, rel=0.03)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(0.3, rel=0.03)


def test_transmit_seeded_regression():
    H = np.array([[1 + 0.5j, -0.3], [0.2j, 0.8 - 0.1j]])
    x = np.array([0.7 - 0.7j, 0.2 + 0.4j])
    y = flat_fading_transmit(H, x, 2.0, 0.5, np.random.default_rng(42))
    g = np.random.default_rng(42)
    re, im = g.standard_normal(2), g.standard_normal(2)
    hand = np.sqrt(2.0) * (H @ x) + np.sqrt(0.25) * (re + 1j * im)
    assert np.array_equal(y, hand)


def test_transmit_errors():
    with pytest.raises(ShapeError):
        flat_fading_transmit(np.eye(2), np.ones(3), 1.0, 0.0)
    with pytest.raises(DomainError):
        flat_fading_transmit(np.eye(2), np.ones(2), 1.0, 1.0)  # no generator


def test_aggregate_halves():
    H = np.arange(16, dtype=complex).reshape(2, 8)  # 4 rows x 2 cols of cells
    agg = aggregate_halves(H, 4, 2)
    assert_allclose(agg[:, 0], H[:, :4].sum(axis=1))
    assert_allclose(agg[:, 1], H[:, 4:].sum(axis=1))
    with pytest.raises(ShapeError):
        aggregate_halves(H, 3, 2)


def test_random_channel_statistics():
    h = random_channel(np.random.default_rng(1), (200, 200))
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, rel=0.02)


# beamforming

def test_equidistant_phases_vanish():
    lam = 0.05
    bf = beamforming_matrix(np.full(9, 3 * lam), lam)
    assert np.all(np.minimum(bf.phases, 2 * np.pi - bf.phases) < 1e-9)
    assert_allclose(np.abs(np.diag(bf.matrix)), 1.0)
    assert np.count_nonzero(bf.matrix - np.diag(np.diag(bf.matrix))) == 0


def _scenario(n, distance=100.0):
    g = iso_geom(n, n, f=5.8e9)
    rx = RxAntennaConfig(1.0, (0.3 * distance, 0.2 * distance, distance))
    links = link_table(g, [rx])
    d = np.array([[lk.distance for lk in row] for row in links[0]])
    return g, rx, links, d


def test_beamforming_gain_scales_with_cells():
    ref = None
    for n in (1, 4, 8, 16):
        g, rx, links, d = _scenario(n)
        phases = beamforming_matrix(d, g.wavelength).phases.reshape(n, n)
        y = abs(received_signal_theorem1(g, np.exp(1j * phases), [rx], 1.0, links)[0])
        if ref is None:
            ref = y
        assert y / ref == pytest.approx(n * n, rel=1e-3)


def test_random_phases_fall_short():
    g, rx, links, d = _scenario(16)
    phases = beamforming_matrix(d, g.wavelength).phases.reshape(16, 16)
    y_bf = abs(received_signal_theorem1(g, np.exp(1j * phases), [rx], 1.0, links)[0])
    rng = np.random.default_rng(9)
    rnd = [abs(received_signal_theorem1(g, np.exp(1j * rng.uniform(0, 2 * np.pi, (16, 16))), [rx], 1.0, links)[0]) for _ in range(200)]
    assert y_bf > 3 * np.mean(rnd)
    # random phasor sum: mean magnitude near sqrt(pi*NM/4) single-cell units
    single = y_bf / 256
    assert np.mean(rnd) / single == pytest.approx(np.sqrt(np.pi * 256 / 4), rel=0.15)


def test_beamforming_beats_random_unit_modulus():
    g, rx, links, d = _scenario(4, distance=0.5)  # near field, exact distances
    H = channel_matrix(g, [rx], links).entries[0]
    w = np.exp(1j * beamforming_matrix(d, g.wavelength).phases)
    best = abs(H @ w)
    rng = np.random.default_rng(2)
    trials = np.exp(1j * rng.uniform(0, 2 * np.pi, (1000, 16)))
    assert np.all(np.abs(trials @ H) <= best * (1 + 1e-12))


# CSV

def test_channel_csv_round_trip(tmp_path):
    H = random_channel(np.random.default_rng(4), (2, 3))
    path = tmp_path / "h.csv"
    save_channel_csv(H, path, footer="# seed=4 version=t")
    assert path.read_text().splitlines()[0] == "row,col,re,im"
    assert np.array_equal(load_channel_csv(path), H)


def test_channel_csv_incomplete(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("row,col,re,im\n0,0,1,0\n1,1,1,0\n")
    with pytest.raises(ShapeError):
        load_channel_csv(path)


def test_positions_csv(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x,y,z\n0,0,1.5\n0.1,0,1.5\n")
    assert_allclose(load_positions_csv(path), [[0, 0, 1.5], [0.1, 0, 1.5]])
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ShapeError):
        load_positions_csv(path)
