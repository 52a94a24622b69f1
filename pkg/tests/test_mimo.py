import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import simplex_grid_best_vectorized
from nrsim.channel import ChannelMatrix, RngStream, complex_gaussian, draw_rayleigh
from nrsim.errors import InvalidArgument, NoCapacityError
from nrsim.mimo import (
    EigenSpectrum,
    MimoMode,
    batch_eigenvalues,
    batch_waterfill,
    efficiency_from_eigenvalues,
    eigen_spectrum,
    mode_efficiency,
    spectral_efficiency_equal_power,
    spectral_efficiency_mode,
    waterfill_eigenmodes,
)


def test_identity_two_by_two():
    assert spectral_efficiency_equal_power(np.eye(2), 1.0) == pytest.approx(2.0, abs=1e-12)


def test_siso_zero_snr():
    assert spectral_efficiency_equal_power(np.array([[0.7 + 0.1j]]), 0.0) == 0.0


def test_siso_closed_form():
    h = np.array([[0.6 - 0.8j]])  # |h|^2 = 1
    assert spectral_efficiency_equal_power(h, 15.0) == pytest.approx(4.0, abs=1e-12)


def test_zero_matrix():
    assert spectral_efficiency_equal_power(np.zeros((2, 3)), 10.0) == 0.0
    with pytest.raises(NoCapacityError):
        waterfill_eigenmodes(eigen_spectrum(np.zeros((2, 2))), 1.0, 1.0)


def test_negative_rho():
    with pytest.raises(InvalidArgument):
        spectral_efficiency_equal_power(np.eye(2), -0.1)


def test_nonfinite_rejected():
    with pytest.raises(InvalidArgument):
        spectral_efficiency_equal_power(np.array([[np.inf]]), 1.0)


@pytest.mark.parametrize("nr, nt", [(1, 1), (1, 4), (4, 1), (2, 3), (4, 4), (8, 2)])
def test_logdet_matches_eigensum(nr, nt):
    for i in range(50):
        h = draw_rayleigh(RngStream(3, i, nr * 10 + nt), nt, nr)
        for rho in (0.01, 1.0, 100.0):
            direct = spectral_efficiency_equal_power(h, rho)
            ev = np.linalg.eigvalsh(h.entries @ h.entries.conj().T)
            assert direct == pytest.approx(np.sum(np.log2(1 + rho * np.maximum(ev, 0))), abs=1e-9)
            assert direct == pytest.approx(efficiency_from_eigenvalues(eigen_spectrum(h).eigenvalues, rho), abs=1e-9)


def test_batch_eigenvalues_agrees_with_svd():
    h = complex_gaussian(RngStream(4).generator(), (20, 3, 5))
    ev = batch_eigenvalues(h)
    sv = np.linalg.svd(h, compute_uv=False) ** 2
    np.testing.assert_allclose(ev, sv, rtol=1e-10, atol=1e-12)


def test_eigen_spectrum_sorted():
    s = EigenSpectrum((0.1, 3.0, 1.0))
    assert s.eigenvalues == (3.0, 1.0, 0.1)
    with pytest.raises(InvalidArgument):
        EigenSpectrum((-1.0,))


def test_waterfill_weak_mode_off():
    alloc = waterfill_eigenmodes([1.0, 0.01], 1.0, 1.0)
    assert alloc.powers == pytest.approx((1.0, 0.0), abs=1e-12)


def test_waterfill_equal_modes_equal_power():
    alloc = waterfill_eigenmodes([2.0, 2.0, 2.0], 3.0, 1.0)
    assert alloc.powers == pytest.approx((1.0, 1.0, 1.0))


def test_waterfill_input_order_preserved():
    alloc = waterfill_eigenmodes([0.01, 1.0], 1.0, 1.0)
    assert alloc.powers == pytest.approx((0.0, 1.0), abs=1e-12)


def _rate(ev, p):
    return np.sum(np.log2(1 + p * ev), axis=-1)


@pytest.mark.parametrize("seed", range(20))
def test_waterfill_beats_grid_search(seed):
    gen = np.random.default_rng(seed)
    m = int(gen.integers(1, 4))
    ev = 10 ** gen.uniform(-2, 1, m)
    p_total = float(10 ** gen.uniform(-1, 1))
    alloc = waterfill_eigenmodes(ev, p_total, 1.0)
    best, _ = simplex_grid_best_vectorized(lambda x: _rate(ev, p_total * x), m, 1e-3)
    assert _rate(ev, np.array(alloc.powers)) >= best - 1e-9
    assert sum(alloc.powers) == pytest.approx(p_total, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(1e-4, 1e4), min_size=1, max_size=8), st.floats(1e-3, 1e3))
def test_waterfill_kkt(ev, p_total):
    ev = np.array(ev)
    alloc = waterfill_eigenmodes(ev, p_total, 1.0)
    p = np.array(alloc.powers)
    mu = alloc.water_level
    assert p.sum() == pytest.approx(p_total, rel=1e-9)
    assert np.all(p >= 0)
    on = p > 0
    np.testing.assert_allclose(p[on] + 1 / ev[on], mu, rtol=1e-9)
    assert np.all(1 / ev[~on] >= mu * (1 - 1e-9))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-4, 1e4), min_size=1, max_size=6), st.floats(1e-3, 1e3))
def test_batch_waterfill_matches_loop(ev, p_total):
    ev = np.sort(np.array(ev))[::-1]
    loop = np.array(waterfill_eigenmodes(ev, p_total, 1.0).powers)
    np.testing.assert_allclose(batch_waterfill(ev[None, :], p_total)[0], loop, rtol=1e-9, atol=1e-12)


def test_waterfill_at_least_equal_power():
    for i in range(200):
        h = draw_rayleigh(RngStream(8, i), 4, 4)
        for rho in (0.01, 0.3, 3.0):
            wf = spectral_efficiency_mode(h, rho, MimoMode.MULTIPLEXING_WATERFILLING)
            ep = spectral_efficiency_mode(h, rho, MimoMode.MULTIPLEXING_EQUAL_POWER)
            assert wf >= ep - 1e-9


def test_waterfill_high_snr_converges_to_equal_power():
    h = draw_rayleigh(RngStream(9), 2, 2)
    rho = 1e6
    wf = spectral_efficiency_mode(h, rho, MimoMode.MULTIPLEXING_WATERFILLING)
    ep = spectral_efficiency_mode(h, rho, MimoMode.MULTIPLEXING_EQUAL_POWER)
    assert (wf - ep) / ep < 1e-3


def test_mode_closed_forms():
    h = np.array([[1.0, 0.5j], [0.2, 0.3]])
    ev = np.linalg.eigvalsh(h @ h.conj().T)
    rho = 2.0
    assert spectral_efficiency_mode(h, rho, "beamforming") == pytest.approx(np.log2(1 + rho * 2 * ev.max()))
    fro = np.sum(np.abs(h) ** 2)
    assert spectral_efficiency_mode(h, rho, "diversity") == pytest.approx(np.log2(1 + rho * 2 * fro))


def test_mode_efficiency_vectorized_matches_scalar():
    h = complex_gaussian(RngStream(10).generator(), (30, 2, 4))
    ev = batch_eigenvalues(h)
    rho = np.linspace(0.1, 10, 30)
    for mode in MimoMode:
        vec = mode_efficiency(ev, rho, 4, mode)
        scalar = [spectral_efficiency_mode(h[i], rho[i], mode) for i in range(30)]
        np.testing.assert_allclose(vec, scalar, rtol=1e-10)


def test_unknown_mode():
    with pytest.raises(ValueError):
        spectral_efficiency_mode(np.eye(2), 1.0, "telepathy")


def test_channel_matrix_input():
    h = ChannelMatrix(np.eye(2, dtype=complex))
    assert spectral_efficiency_mode(h, 1.0, MimoMode.MULTIPLEXING_EQUAL_POWER) == pytest.approx(2.0)


def test_waterfill_extreme_dynamic_range():
    alloc = waterfill_eigenmodes([1e-250], 1.0, 1.0)
    assert alloc.powers == (1.0,)
    np.testing.assert_allclose(batch_waterfill(np.array([[1e-250, 0.0]]), 1.0), [[1.0, 0.0]])
