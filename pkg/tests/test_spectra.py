import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hmmcoupling.errors import DipCountError, EstimationError
from hmmcoupling.materials import DyeModel, dye_plasma_frequency
from hmmcoupling.polariton import rabi_splitting_meV
from hmmcoupling.presets import kretschmann_stack
from hmmcoupling.spectra import (
    Dip,
    DipReport,
    SensingCurve,
    SensingRow,
    Spectrum,
    concentration_sweep,
    estimate_concentration,
    find_dips,
    hc_over_e_nm,
    simulate_spectrum,
    splitting_energy,
)

THETA = math.radians(48)
GRID = np.arange(400e-9, 700.0001e-9, 0.5e-9)
WINDOW = (450e-9, 650e-9)


def _dips(C, theta=THETA, grid=GRID, window=WINDOW):
    return find_dips(simulate_spectrum(kretschmann_stack(C), grid, theta), 0.02, window)


# --- dip finding --------------------------------------------------------------------


def test_monotone_spectrum_has_no_dips():
    lam = np.linspace(400e-9, 700e-9, 100)
    assert find_dips(Spectrum(lam, np.linspace(0.1, 0.9, 100))).count == 0


def test_window_errors():
    lam = np.linspace(400e-9, 700e-9, 100)
    spec = Spectrum(lam, np.ones(100))
    with pytest.raises(ValueError):
        find_dips(spec, window=(800e-9, 900e-9))
    with pytest.raises(ValueError):
        find_dips(spec, window=(400e-9, 410e-9))


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum([2.0, 1.0], [0.1, 0.2])


def test_lorentzian_dip_refinement():
    lam = np.arange(500e-9, 600e-9, 0.5e-9)
    centre, width = 537.37e-9, 12e-9
    R = 1 - 0.8 / (1 + ((lam - centre) / width) ** 2)
    report = find_dips(Spectrum(lam, R))
    assert report.count == 1
    assert report.dips[0].lambda_min == pytest.approx(centre, abs=0.01e-9)
    assert report.dips[0].R_min == pytest.approx(0.2, abs=1e-3)


def test_parabola_is_exact_for_parabolas():
    lam = np.linspace(500e-9, 600e-9, 41)
    R = 0.3 + 1e14 * (lam - 551.3e-9) ** 2
    dip = find_dips(Spectrum(lam, R)).dips[0]
    assert dip.lambda_min == pytest.approx(551.3e-9, abs=1e-18)
    assert dip.R_min == pytest.approx(0.3, abs=1e-12)


def test_prominence_filter_and_order():
    lam = np.linspace(400e-9, 700e-9, 601)
    x = lam * 1e9
    R = (1 - 0.5 * np.exp(-((x - 600) / 10) ** 2) - 0.4 * np.exp(-((x - 480) / 8) ** 2)
         - 0.005 * np.exp(-((x - 540) / 2) ** 2))
    report = find_dips(Spectrum(lam, R), prominence_threshold=0.02)
    assert report.count == 2
    assert report.wavelengths() == sorted(report.wavelengths())
    assert all(d.prominence >= 0.02 for d in report.dips)
    assert find_dips(Spectrum(lam, R), prominence_threshold=0.001).count == 3


# --- splitting ---------------------------------------------------------------------


def test_hc_over_e():
    assert hc_over_e_nm() == pytest.approx(1239.84, abs=0.01)


def test_splitting_examples():
    assert splitting_energy([498e-9, 586e-9]) == pytest.approx(374, abs=1)
    assert splitting_energy([550e-9, 550e-9]) == 0
    assert splitting_energy([400e-9, 620e-9]) == pytest.approx(1239.84 * (1 / 0.4 - 1 / 0.62), abs=0.05)
    assert splitting_energy([400e-9, 620e-9]) == pytest.approx(1099.86, abs=0.05)


def test_splitting_needs_two_dips():
    with pytest.raises(DipCountError):
        splitting_energy(DipReport((Dip(5e-7, 0.1, 0.3),)))
    with pytest.raises(DipCountError):
        splitting_energy([4e-7, 5e-7, 6e-7])


@given(st.floats(300, 900), st.floats(300, 900))
def test_splitting_antisymmetric(a, b):
    forward = splitting_energy([a * 1e-9, b * 1e-9])
    assert forward == pytest.approx(-splitting_energy([b * 1e-9, a * 1e-9]), rel=1e-12, abs=1e-12)
    if a < b:
        assert forward > 0


# --- the Kretschmann sensor -------------------------------------------------------


def test_strong_coupling_dips():
    report = _dips(0.1)
    assert report.count == 2
    l1, l2 = (x * 1e9 for x in report.wavelengths())
    assert l1 == pytest.approx(498, abs=10)
    assert l2 == pytest.approx(586, abs=10)


def test_bare_stack_single_dip():
    assert _dips(0.0).count == 1


@pytest.mark.parametrize("C", [0.0, 0.005, 0.1])
def test_grid_refinement_stability(C):
    coarse = _dips(C).wavelengths()
    fine = _dips(C, grid=np.arange(400e-9, 700.0001e-9, 0.25e-9)).wavelengths()
    assert len(coarse) == len(fine)
    assert max(abs(a - b) for a, b in zip(coarse, fine)) < 0.5e-9


def test_weak_coupling_sweep():
    curve = concentration_sweep(kretschmann_stack(), [0, 0.002, 0.005, 0.01], THETA, GRID,
                                window=WINDOW)
    assert [r.dip_count for r in curve.rows] == [1, 1, 1, 1]
    rmin = curve.column("R_min")
    assert rmin[0] == pytest.approx(0.2, abs=0.05)
    assert rmin[-1] == pytest.approx(0.04, abs=0.05)
    assert all(b < a for a, b in zip(rmin, rmin[1:]))
    assert all(r.splitting_meV is None and r.lambda_2 is None for r in curve.rows)


def test_strong_coupling_sweep():
    Cs = [0.02, 0.03, 0.05, 0.07, 0.1]
    curve = concentration_sweep(kretschmann_stack(), Cs, THETA, GRID, window=WINDOW, workers=3)
    counts = [r.dip_count for r in curve.rows]
    assert counts[-2:] == [2, 2]
    assert curve.onset() in Cs
    strong = [r.splitting_meV for r in curve.rows if r.dip_count == 2]
    assert all(b >= a for a, b in zip(strong, strong[1:]))
    assert all((r.splitting_meV is not None) == (r.dip_count == 2) for r in curve.rows)


def test_splitting_exceeds_collective_estimate():
    sim = splitting_energy(_dips(0.1))
    est = rabi_splitting_meV(dye_plasma_frequency(DyeModel(concentration=0.1)))
    assert 1.0 <= sim / est <= 2.0


@pytest.mark.parametrize("theta_deg,direction", [(47.5, -1), (49.0, +1)])
def test_shift_direction(theta_deg, direction):
    theta = math.radians(theta_deg)
    bare = _dips(0.0, theta).wavelengths()[0]
    dyed = _dips(0.005, theta).wavelengths()[0]
    assert np.sign(dyed - bare) == direction


def test_sweep_independent_of_workers():
    Cs = [0, 0.002, 0.005, 0.01, 0.05, 0.1]
    texts = []
    for w in (1, 2, 4):
        buf = io.StringIO()
        concentration_sweep(kretschmann_stack(), Cs, THETA, GRID, window=WINDOW, workers=w).to_csv(buf)
        texts.append(buf.getvalue())
    assert texts[0] == texts[1] == texts[2]


def test_sweep_records_row_errors():
    curve = concentration_sweep(kretschmann_stack(), [0, 0.1], THETA, GRID, window=(800e-9, 900e-9))
    assert len(curve.rows) == 2
    assert all(r.error and r.dip_count == 0 for r in curve.rows)


def test_sweep_input_validation():
    with pytest.raises(ValueError):
        concentration_sweep(kretschmann_stack(), [0.1, 0.0], THETA, GRID)
    with pytest.raises(ValueError):
        concentration_sweep(kretschmann_stack(), [-0.1], THETA, GRID)


def test_sensing_csv():
    curve = SensingCurve([SensingRow(0.0, 1, 5.392e-7, None, 0.209, None),
                          SensingRow(0.1, 2, 5.024e-7, 5.892e-7, 0.067, 363.7)])
    buf = io.StringIO()
    curve.to_csv(buf)
    assert buf.getvalue() == ("C_molar,dip_count,lambda1_nm,lambda2_nm,Rmin1,splitting_meV\n"
                              "0,1,539.2,,0.209,\n"
                              "0.1,2,502.4,589.2,0.067,363.7\n")


# --- calibration inversion ----------------------------------------------------------


def _toy_curve():
    return SensingCurve([SensingRow(C, 1, 5.4e-7 - C * 1e-7, None, R, None)
                         for C, R in ((0.0, 0.2), (0.002, 0.15), (0.005, 0.1), (0.01, 0.04))])


def test_estimate_at_node_and_midpoint():
    curve = _toy_curve()
    assert estimate_concentration("R_min", 0.1, curve).C == 0.005
    est = estimate_concentration("R_min", 0.125, curve)
    assert 0.002 < est.C < 0.005 and est.bracket == (0.002, 0.005)


def test_estimate_errors():
    curve = _toy_curve()
    with pytest.raises(EstimationError, match="0.04"):
        estimate_concentration("R_min", 0.5, curve)
    bumpy = SensingCurve([SensingRow(0.0, 1, R_min_1=0.2), SensingRow(0.1, 1, R_min_1=0.1),
                          SensingRow(0.2, 1, R_min_1=0.15)])
    with pytest.raises(EstimationError):
        estimate_concentration("R_min", 0.12, bumpy)
    with pytest.raises(EstimationError):
        estimate_concentration("splitting_meV", 100, curve)
    with pytest.raises(ValueError):
        estimate_concentration("colour", 1, curve)


def test_estimate_round_trip():
    curve = concentration_sweep(kretschmann_stack(), [0.002, 0.005, 0.0075, 0.01], THETA, GRID,
                                window=WINDOW)
    probe = _dips(0.004).dips[0].R_min
    est = estimate_concentration("R_min", probe, curve)
    assert est.C == pytest.approx(0.004, rel=0.25)
