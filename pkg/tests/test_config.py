import pytest
from hypothesis import given
from hypothesis import strategies as st

from superdet.analog_params import MissingParameterError, sound_speed
from superdet.config import ConfigError, RunConfig, parse_config
from superdet.detection_model import MU_SQ_SQL

FULL = """
[physical]
preset = cs133
g2d = 1e-44        ; J m^2
alphaR = -2.5e-3
alpha = 1.0e-12

[geometry]
x1 = 0.0, 0.0
x2 = 3e-6, 4e-6
delta = 5e-6

[detection]
mu_sq = squeezed
delta_lo = 2.5
band_min = -3
band_max = 0.5
grid_size = 31
single_trajectory = yes

[simulate]
seed = 7
n_samples = 65536
sample_rate = 4.0
segments = 64
branch = sum
"""


def test_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    g = cfg.build_geometry()
    assert g.delta == 1.0 and g.c_s == 1.0
    assert cfg.mu_sq_value() == MU_SQ_SQL
    assert not cfg.squeezed


def test_full_config():
    cfg = parse_config(FULL)
    g = cfg.build_geometry()
    assert g.delta == pytest.approx(5e-6, rel=1e-15)
    assert g.c_s == sound_speed(cfg.condensate())
    assert cfg.squeezed
    assert cfg.detection.single_trajectory is True
    assert cfg.simulate.branch == "sum"


def test_round_trip_full():
    cfg = parse_config(FULL)
    text = cfg.to_ini()
    again = parse_config(text)
    assert again == cfg
    assert again.to_ini() == text
    assert again.digest() == cfg.digest()


@given(
    st.floats(1e-6, 1e6),
    st.floats(1e-3, 1e3),
    st.floats(-50, -1e-3),
    st.integers(2, 500),
    st.integers(0, 2**63),
    st.one_of(st.sampled_from(["sql", "squeezed"]), st.floats(1e-4, 1e4)),
)
def test_round_trip_property(delta, c_s, band_min, grid, seed, mu):
    text = f"""
[geometry]
delta = {delta!r}
c_s = {c_s!r}
[detection]
mu_sq = {mu}
band_min = {band_min!r}
grid_size = {grid}
[simulate]
seed = {seed}
"""
    cfg = parse_config(text)
    assert parse_config(cfg.to_ini()) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "[geometry]\nspeed = 1\n",
        "[plotting]\ndpi = 300\n",
        "[detection]\nmu_sq = huge\n",
        "[detection]\nmu_sq = -1\n",
        "[detection]\nband_min = 1\nband_max = 0\n",
        "[geometry]\nx1 = 0, 0\n",
        "[geometry]\nx1 = 0, 0\nx2 = 1, 0\ndelta = 2\n",
        "[geometry]\nc_s = 0\n",
        "[simulate]\nn_samples = 1000\n",
        "[simulate]\nbranch = left\n",
        "[physical]\npreset = rb87\n",
        "[physical]\nrho0 = 1e15\n",
        "[geometry\n",
        "[detection]\ngrid_size = 3.5\n",
    ],
)
def test_rejected(text):
    with pytest.raises(ConfigError):
        cfg = parse_config(text)
        cfg.condensate()


def test_missing_constant_is_named():
    cfg = parse_config("[physical]\npreset = cs133\n")
    with pytest.raises(MissingParameterError, match="g2d"):
        cfg.build_geometry()
    cfg = parse_config("[physical]\npreset = cs133\n[detection]\nmu_sq = physical\n[geometry]\nc_s = 1\n")
    with pytest.raises(MissingParameterError, match="alpha"):
        cfg.mu_sq_value()


def test_physical_coupling():
    cfg = parse_config(FULL.replace("mu_sq = squeezed", "mu_sq = physical"))
    assert cfg.mu_sq_value() > 0


def test_c_s_override_beats_condensate():
    cfg = parse_config(FULL.replace("delta = 5e-6", "delta = 5e-6\nc_s = 2.0"))
    assert cfg.build_geometry().c_s == 2.0
