import math

import numpy as np
import pytest

from nrsim.channel import ChannelMatrix, LinkState, RngStream
from nrsim.errors import InvalidArgument
from nrsim.network import (
    Area,
    Interferer,
    NetworkLayout,
    Site,
    UeCapability,
    UserEquipment,
    build_hex_layout,
    compute_link_budget,
    drop_ues,
    link_budgets,
    site_density,
)
from nrsim.propagation import PathLossParams
from nrsim.quantities import NoiseSpec, db_to_linear, linear_to_db

MICRO = Site(height=10.0, tx_power=40.0, cell_type="micro")
FLAT = PathLossParams(3.0, 0.0)


def _states(n, los=True):
    return [LinkState(los, 0.0, ChannelMatrix(np.eye(1))) for _ in range(n)]


@pytest.mark.parametrize("isd, expected", [(1000.0, 1.1547005), (150.0, 51.320024), (170.0, 39.955042)])
def test_site_density(isd, expected):
    assert site_density(isd) == pytest.approx(expected, abs=1e-5)


def test_site_density_bad():
    with pytest.raises(InvalidArgument):
        site_density(0.0)


def test_single_site_small_area():
    layout = build_hex_layout(500.0, Area(0, 0, 200, 200), MICRO)
    assert len(layout.sites) == 1
    assert layout.sites[0].position == (100.0, 100.0)


def test_density_over_large_area():
    layout = build_hex_layout(150.0, Area(0, 0, 2000, 2000), MICRO)
    achieved = len(layout.sites) / 4.0
    # one boundary row is about 2000 / 150 sites
    assert abs(achieved - site_density(150.0)) <= (2000 / 150 + 1) / 4.0


def test_nearest_neighbor_spacing():
    layout = build_hex_layout(200.0, Area(0, 0, 1000, 1000), MICRO)
    xy = layout.site_xy
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    np.fill_diagonal(d, np.inf)
    np.testing.assert_allclose(d.min(axis=1), 200.0, rtol=1e-6)
    assert max(len(n) for n in layout.neighbors()) == 6


def test_area_scaling():
    a = len(build_hex_layout(100.0, Area(0, 0, 1000, 1000), MICRO).sites)
    b = len(build_hex_layout(100.0, Area(0, 0, 2000, 1000), MICRO).sites)
    assert abs(b - 2 * a) <= 1000 / (100 * math.sqrt(3) / 2) + 1


def test_degenerate_area():
    with pytest.raises(InvalidArgument):
        Area(0, 0, 0, 10)


def test_site_power_bounds():
    with pytest.raises(InvalidArgument):
        Site(tx_power=40.0, cell_type="macro")
    with pytest.raises(InvalidArgument):
        Site(tx_power=38.0, cell_type="small-cell")
    with pytest.raises(InvalidArgument):
        Site(height=0.0)
    Site(tx_power=37.0, cell_type="small-cell")


def test_capability_bounds():
    with pytest.raises(InvalidArgument):
        UeCapability(0, 4)


def test_drop_ues():
    layout = build_hex_layout(200.0, Area(0, 0, 800, 800), MICRO)
    assert drop_ues(RngStream(1), layout, 0) == []
    ues = drop_ues(RngStream(1), layout, 3)
    assert len(ues) == 3 * len(layout.sites)
    assert ues == drop_ues(RngStream(1), layout, 3)
    assert all(layout.area.contains(np.array(u.position))[0] for u in ues)


def test_drop_uniform_centroid():
    area = Area(0, 0, 1000, 500)
    layout = NetworkLayout(sites=(MICRO,), ues=(), isd=200.0, area=area)
    ues = drop_ues(RngStream(2), layout, 100_000)
    xy = np.array([u.position for u in ues])
    assert abs(xy[:, 0].mean() - 500) <= 0.02 * 1000
    assert abs(xy[:, 1].mean() - 250) <= 0.02 * 500


def test_table_export():
    layout = build_hex_layout(200.0, Area(0, 0, 400, 400), MICRO)
    lines = layout.to_table().strip().splitlines()
    assert lines[0] == "site_id,x,y,type"
    assert len(lines) == len(layout.sites) + 1
    assert lines[1].split(",")[3] == "micro"


def test_single_site_sinr_equals_snr():
    layout = build_hex_layout(500.0, Area(0, 0, 200, 200), MICRO)
    ue = UserEquipment((150.0, 100.0))
    lb = compute_link_budget(ue, layout, _states(1), FLAT, frequency=3.5e9, bandwidth=20e6)
    assert lb.sinr == lb.snr
    assert lb.interference == -math.inf
    assert lb.serving_site == 0


def test_two_equal_sites_closed_form():
    area = Area(0, 0, 400, 10)
    sites = (Site((100.0, 5.0), 10.0, 40.0, "", "micro"), Site((300.0, 5.0), 10.0, 40.0, "", "micro"))
    layout = NetworkLayout(sites=sites, ues=(), isd=200.0, area=area)
    ue = UserEquipment((200.0, 5.0))
    lb = compute_link_budget(ue, layout, _states(2), FLAT, frequency=3.5e9, bandwidth=20e6)
    s = db_to_linear(lb.rx_power)
    n = db_to_linear(lb.noise)
    assert lb.interference == pytest.approx(lb.rx_power, abs=1e-9)
    assert lb.sinr == pytest.approx(linear_to_db(s / (n + s)), abs=1e-9)
    assert lb.sinr < lb.snr


def test_interferer_lowers_sinr():
    layout = build_hex_layout(500.0, Area(0, 0, 200, 200), MICRO)
    ue = UserEquipment((150.0, 100.0))
    kw = dict(frequency=28e9, bandwidth=100e6, noise=NoiseSpec(-174.0, 9.0))
    a = compute_link_budget(ue, layout, _states(1), FLAT, **kw)
    b = compute_link_budget(ue, layout, _states(1), FLAT, Interferer(50.0, 23.0), **kw)
    assert b.sinr < a.sinr
    assert b.snr == a.snr


def test_sinr_never_above_snr_and_power_shift_invariance():
    layout = build_hex_layout(200.0, Area(0, 0, 800, 800), MICRO)
    gen = RngStream(3).generator()
    n_ue, n_s = 200, len(layout.sites)
    xy = gen.random((n_ue, 2)) * 800
    los = gen.random((n_ue, n_s)) < 0.5
    shadow = 6.0 * gen.standard_normal((n_ue, n_s))
    args = (xy, 1.5, layout, 3.5e9, 20e6, los, shadow, PathLossParams(2.7, 4), PathLossParams(3.2, 7), NoiseSpec())
    out = link_budgets(*args)
    assert np.all(out["sinr_db"] <= out["snr_db"])
    shifted = NetworkLayout(tuple(Site(s.position, s.height, 30.0, "", "micro") for s in layout.sites), (), 200.0, layout.area)
    out2 = link_budgets(xy, 1.5, shifted, *args[3:])
    np.testing.assert_array_equal(out["serving"], out2["serving"])


def test_link_state_count_mismatch():
    layout = build_hex_layout(200.0, Area(0, 0, 800, 800), MICRO)
    with pytest.raises(InvalidArgument):
        compute_link_budget(UserEquipment((1.0, 1.0)), layout, _states(1), FLAT, frequency=3.5e9, bandwidth=20e6)
