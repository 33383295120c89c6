import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kerrwigner.core import (
    PROFILES,
    TWO_OVER_PI,
    PhasePoint,
    PolarGrid,
    SimulationConfig,
    WignerField,
    coherent_wigner,
    coherent_wigner_init,
    config_from_profile,
    default_r_max,
    field_from_function,
    phase_space_integral,
    rescaled_damping,
    sample_window,
)
from kerrwigner.errors import WindowExceedsGridError


@given(r=st.floats(1e-6, 50), phi=st.floats(0, 2 * math.pi, exclude_max=True))
def test_phase_point_round_trip(r, phi):
    p = PhasePoint(r, phi)
    back = PhasePoint.from_complex(p.gamma)
    assert back.r == pytest.approx(r, rel=1e-12)
    d = abs((back.phi - phi + math.pi) % (2 * math.pi) - math.pi)
    assert d <= 1e-12 * max(1.0, phi) or math.isclose(d, 0, abs_tol=1e-12)


def test_phase_point_validation():
    with pytest.raises(ValueError):
        PhasePoint(-1.0, 0.0)
    assert PhasePoint(1.0, 2 * math.pi + 0.5).phi == pytest.approx(0.5)


def test_grid_geometry_and_validation():
    g = PolarGrid(10, 16, 5.0)
    assert g.dr == 0.5 and g.dphi == pytest.approx(2 * math.pi / 16)
    assert g.radii[0] == 0.5 and g.radii[-1] == 5.0
    assert g.shape == (10, 16) and g.size == 160
    assert PolarGrid.parse("150x270", 5.0) == PolarGrid(150, 270, 5.0)
    with pytest.raises(ValueError):
        PolarGrid(4, 16, 5.0)
    with pytest.raises(ValueError):
        PolarGrid(10, 4, 5.0)


def test_coherent_examples():
    assert coherent_wigner(5, 5 + 0j) == pytest.approx(TWO_OVER_PI, rel=1e-15)
    assert coherent_wigner(0, 0j) == pytest.approx(TWO_OVER_PI, rel=1e-15)
    assert coherent_wigner(2, 0j) == pytest.approx(TWO_OVER_PI * math.exp(-8), rel=1e-15)
    assert coherent_wigner(2, 0j) == pytest.approx(2.1351e-4, rel=5e-4)


def test_coherent_init_rotation_covariance():
    g = PolarGrid(40, 36, 6.0)
    steps = 5
    theta = steps * g.dphi
    rotated = coherent_wigner_init(2 * np.exp(1j * theta), g)
    np.testing.assert_allclose(rotated.values, coherent_wigner_init(2, g).rotated(steps).values,
                               atol=1e-12, rtol=0)


def test_field_is_immutable_and_finite():
    g = PolarGrid(6, 8, 3.0)
    f = WignerField(g, np.zeros(g.shape))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0
    bad = np.zeros(g.shape)
    bad[1, 1] = np.nan
    with pytest.raises(ValueError):
        WignerField(g, bad)


def test_integral_examples():
    f = coherent_wigner_init(2, PolarGrid(300, 540, 5.0))
    assert phase_space_integral(f) == pytest.approx(1.0, abs=1e-3)
    g = PolarGrid(10, 10, 5.0)
    assert phase_space_integral(WignerField(g, np.zeros(g.shape))) == 0.0
    # trapezoid error is dr^2/3 for the vacuum, so 1e-6 needs dr < 1.7e-3
    vac = coherent_wigner_init(0, PolarGrid(4000, 16, 6.0))
    assert phase_space_integral(vac) == pytest.approx(1.0, abs=1e-6)


def test_integral_converges_with_order_two():
    errs, hs = [], []
    # the h^4 correction makes the fitted slope approach 2 from below
    for n in (80, 160, 320):
        g = PolarGrid(n, 2 * n, 6.0)
        errs.append(abs(phase_space_integral(coherent_wigner_init(1.5, g)) - 1))
        hs.append(g.dr)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 1.99


def test_sample_window_peak_and_shape():
    f = coherent_wigner_init(2, PolarGrid(300, 540, 5.0))
    r = sample_window(f, (-3.5, 3.5), (-3.5, 3.5), 100)
    row, col = np.unravel_index(np.argmax(r.values), r.values.shape)
    re, im = r.axes()
    assert abs(re[col] - 2) <= (re[1] - re[0]) and abs(im[row]) <= (im[1] - im[0])
    assert r.values.max() == pytest.approx(TWO_OVER_PI, abs=5e-3)
    small = sample_window(f, (-0.5, 0.5), (-0.5, 0.5), 100)
    assert small.values.shape == (100, 100)


def test_sample_window_zero_field_and_exterior():
    g = PolarGrid(20, 16, 2.0)
    zero = WignerField(g, np.zeros(g.shape))
    assert not np.any(sample_window(zero, (-1, 1), (-1, 1), 10).values)
    with pytest.raises(WindowExceedsGridError):
        sample_window(zero, (-2, 2), (-2, 2), 10)
    clamped = sample_window(zero, (-2, 2), (-2, 2), 10, outside="zero")
    assert clamped.values.shape == (10, 10)


def test_sample_window_exact_for_radially_linear_fields():
    g = PolarGrid(20, 24, 4.0)
    f = field_from_function(g, lambda z: 3.0 - 0.5 * np.abs(z))
    r = sample_window(f, (-2, 2), (-2, 2), 31, center_value=3.0)
    expected = 3.0 - 0.5 * np.abs(r.gammas())
    np.testing.assert_allclose(r.values, expected, atol=1e-12, rtol=0)


def test_config_validation_and_profiles():
    cfg = SimulationConfig(alpha=2)
    assert cfg.grid == PolarGrid(150, 270, 5.0)
    assert cfg.theta == 0.5
    assert SimulationConfig(alpha=2, scheme="backward-euler").theta == 1.0
    with pytest.raises(ValueError):
        SimulationConfig(alpha=2, xi=-1)
    with pytest.raises(ValueError):
        SimulationConfig(alpha=2, n_thermal=-1)
    with pytest.raises(ValueError):
        SimulationConfig(alpha=2, dtau=0)
    with pytest.raises(ValueError):
        SimulationConfig(alpha=3, grid=PolarGrid(10, 10, 5.0))
    with pytest.raises(ValueError):
        SimulationConfig(alpha=1, closure="nope")
    rep = config_from_profile("paper-replica", 2)
    assert (rep.grid.n_r, rep.grid.n_phi, rep.dtau) == (300, 540, math.pi / 3600)
    assert PROFILES["ci"] == (150, 270, math.pi / 1800)
    assert default_r_max(5) == 12.5 and default_r_max(1) == 5.0
    xi, n = rescaled_damping(2)
    assert xi == 2 and n == pytest.approx(3.8e-19)


def test_center_value():
    cfg = SimulationConfig(alpha=2, xi=1.0)
    assert cfg.center_value(0) == pytest.approx(TWO_OVER_PI * math.exp(-8), rel=1e-15)
    assert cfg.center_value(200) == pytest.approx(TWO_OVER_PI, rel=1e-12)
    lossless = SimulationConfig(alpha=2)
    assert lossless.center_value(7.0) == lossless.center_value(0.0)
