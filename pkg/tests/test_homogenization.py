import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmmcoupling.errors import BandEdgeNotFoundError, SingularInputError
from hmmcoupling.homogenization import (
    BandType,
    HomogenizationSpec,
    UniaxialPermittivity,
    band_map,
    calibrate_drude,
    classify_band,
    default_hmm,
    emt_uniaxial,
    find_band_edges,
    mix,
)
from hmmcoupling.materials import SILVER, TIO2, Constant, Drude, wavelength_to_omega

W = 3.5e15


def test_pure_constituents():
    m, d = Constant(-10 + 1j), Constant(7.0)
    e0 = emt_uniaxial(HomogenizationSpec(m, d, 0.0), W)
    assert (e0.eps_perp, e0.eps_par) == (7.0, 7.0)
    e1 = emt_uniaxial(HomogenizationSpec(m, d, 1.0), W)
    assert (e1.eps_perp, e1.eps_par) == (-10 + 1j, -10 + 1j)


def test_pole_proximity():
    eps_d = 4.0
    # pole of eps_par at eps_m = -f eps_d / (1 - f) = -6; probe at -1.5 eps_d = -6
    e = mix(-1.5 * eps_d, eps_d, 0.6)
    assert not np.isfinite(abs(e.eps_par)) or abs(e.eps_par) > 1e3 * eps_d
    near = mix(-1.5 * eps_d * (1 + 1e-5), eps_d, 0.6)
    assert abs(near.eps_par) > 1e3 * eps_d


def test_both_zero_is_singular():
    with pytest.raises(SingularInputError):
        mix(0, 0, 0.5)


def test_fill_fraction_validated():
    with pytest.raises(ValueError):
        HomogenizationSpec(SILVER, TIO2, 1.2)


@settings(max_examples=1000, deadline=None)
@given(st.complex_numbers(max_magnitude=100), st.complex_numbers(max_magnitude=100),
       st.floats(0.01, 0.99))
def test_two_point_formulas(em, ed, f):
    if abs(em) < 1e-3 or abs(ed) < 1e-3:
        return
    denom = f * ed + (1 - f) * em
    if abs(denom) < 1e-6:
        return
    e = mix(em, ed, f)
    assert e.eps_perp == pytest.approx(f * em + (1 - f) * ed, rel=1e-12, abs=1e-12)
    assert e.eps_par == pytest.approx(em * ed / denom, rel=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=100), st.floats(0, 1))
def test_equal_constituents_degenerate(eps, f):
    e = mix(eps, eps, f)
    assert e.eps_perp == eps
    assert e.eps_par == eps


def test_classify_band_examples():
    assert classify_band(UniaxialPermittivity(2, -3)) is BandType.TYPE_I
    assert classify_band(UniaxialPermittivity(-2, 3)) is BandType.TYPE_II
    assert classify_band(UniaxialPermittivity(2, 3)) is BandType.DIELECTRIC
    assert classify_band(UniaxialPermittivity(-2, -3)) is BandType.METALLIC


def test_calibrated_band_edges():
    edges = find_band_edges(default_hmm(0.6), (350e-9, 650e-9), 1e-9)
    assert edges.lambda_enz * 1e9 == pytest.approx(414, abs=5)
    assert edges.lambda_enp * 1e9 == pytest.approx(513, abs=5)
    # the edges are true zeros of the defining real parts
    e = emt_uniaxial(default_hmm(0.6), wavelength_to_omega(edges.lambda_enz))
    assert abs(e.eps_perp.real) < 1e-6
    e = emt_uniaxial(default_hmm(0.6), wavelength_to_omega(edges.lambda_enp))
    assert abs((1 / e.eps_par).real) < 1e-6


def test_pure_dielectric_has_no_edges():
    with pytest.raises(BandEdgeNotFoundError) as info:
        find_band_edges(default_hmm(0.0), (350e-9, 650e-9))
    assert set(info.value.missing) == {"ENZ", "ENP"}


def test_band_layout():
    # type I (eps_par < 0 < eps_perp) ends at ENZ and type II (eps_perp < 0 < eps_par)
    # starts at ENP; with ENZ < ENP both real parts are negative in between
    edges = find_band_edges(default_hmm(0.6))
    lo, hi = edges.lambda_enz, edges.lambda_enp
    below = np.linspace(380e-9, lo - 1e-9, 30)
    assert set(band_map(default_hmm(0.6), below)) == {BandType.TYPE_I}
    inside = np.linspace(lo + 1e-9, hi - 1e-9, 40)
    assert set(band_map(default_hmm(0.6), inside)) == {BandType.METALLIC}
    above = np.linspace(hi + 1e-9, 700e-9, 40)
    assert set(band_map(default_hmm(0.6), above)) == {BandType.TYPE_II}


def test_calibration_recovers_edges():
    metal = calibrate_drude(414e-9, 513e-9, 7.0, 1.9e14, 0.6)
    assert metal.eps_inf == pytest.approx(SILVER.eps_inf, rel=1e-8)
    assert metal.omega_p == pytest.approx(SILVER.omega_p, rel=1e-8)
    edges = find_band_edges(HomogenizationSpec(metal, TIO2, 0.6))
    assert edges.lambda_enz == pytest.approx(414e-9, abs=1e-12)
    assert edges.lambda_enp == pytest.approx(513e-9, abs=1e-12)


def test_calibration_other_targets():
    metal = calibrate_drude(400e-9, 520e-9, 6.25, 2.7e13, 0.6)
    assert isinstance(metal, Drude)
    edges = find_band_edges(HomogenizationSpec(metal, Constant(6.25), 0.6))
    assert edges.lambda_enz == pytest.approx(400e-9, abs=1e-11)
    assert edges.lambda_enp == pytest.approx(520e-9, abs=1e-11)
