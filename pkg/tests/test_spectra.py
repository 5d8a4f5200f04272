import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsup.errors import ConfigError, DataError, ParseError
from qsup.spectra import (
    AtrConversionConfig,
    Spectrum,
    atr_to_transmissivity,
    check_amide_band,
    convert_axis,
    read_spectrum,
    write_spectrum,
)


def _abs(values, axis=None):
    axis = np.arange(1600.0, 1600.0 + len(values)) if axis is None else axis
    return Spectrum(axis, values, "cm-1", "absorbance")


def test_minimal_csv(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("cm-1,absorbance\n1600,0.01\n1700,0.02\n")
    s = read_spectrum(p)
    assert len(s) == 2 and s.unit == "cm-1" and s.kind == "absorbance"


def test_unsorted_csv_is_sorted(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("# temperature_C: 24\nwavenumber,absorbance\n1700,0.02\n1600,0.01\n1650,0.5\n")
    s = read_spectrum(p)
    assert s.axis.tolist() == [1600, 1650, 1700]
    assert s.values.tolist() == [0.01, 0.5, 0.02]
    assert s.metadata == {"temperature_C": 24}


def test_duplicate_axis_reports_later_line(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("cm-1,absorbance\n1600,0.01\n1650,0.02\n1600,0.03\n")
    with pytest.raises(ParseError) as exc:
        read_spectrum(p)
    assert exc.value.line == 4


@pytest.mark.parametrize(
    "body,line",
    [("furlongs,absorbance\n1,2\n", 1), ("cm-1,absorbance\n1600,abc\n", 2), ("cm-1,absorbance\n1600,1,2\n", 2), ("cm-1,blah\n", 1)],
)
def test_malformed(tmp_path, body, line):
    p = tmp_path / "a.csv"
    p.write_text(body)
    with pytest.raises(ParseError) as exc:
        read_spectrum(p)
    assert exc.value.line == line


def test_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    s = Spectrum(np.sort(rng.uniform(1000, 2000, 1000)), rng.normal(size=1000), "cm-1", "arbitrary", {"k": [1, 2]})
    for name in ("s.csv", "s.json"):
        back = read_spectrum(write_spectrum(s, tmp_path / name))
        np.testing.assert_allclose(back.axis, s.axis, rtol=1e-12)
        np.testing.assert_allclose(back.values, s.values, rtol=1e-12)
        assert back.metadata == s.metadata


def test_atr_examples():
    cfg = AtrConversionConfig(100.0, 6.0, 1)
    assert np.all(atr_to_transmissivity(_abs(np.zeros(5)), cfg).values == 1.0)
    t = atr_to_transmissivity(_abs([0.01]), cfg)
    assert t.kind == "transmissivity_amplitude"
    # alpha = 2.302585e-4 /nm, alpha*L_m = 1.381551, T = 10**-0.6, tau = 10**-0.3
    alpha = 0.01 * math.log(10) / 100.0
    assert alpha == pytest.approx(2.302585e-4, rel=1e-6)
    assert math.exp(-alpha * 6000) == pytest.approx(10**-0.6, rel=1e-14)
    assert t.values[0] == pytest.approx(10**-0.3, rel=1e-14)
    assert t.values[0] == pytest.approx(0.501187, abs=1e-6)


def test_atr_path_doubling():
    A = _abs(np.linspace(0.0, 0.03, 31))
    t1 = atr_to_transmissivity(A, AtrConversionConfig(100.0, 6.0)).values
    t2 = atr_to_transmissivity(A, AtrConversionConfig(100.0, 12.0)).values
    np.testing.assert_allclose(-np.log(t2[1:]), 2 * -np.log(t1[1:]), rtol=1e-12)
    tp = atr_to_transmissivity(A, AtrConversionConfig(100.0, 6.0, pass_count=2)).values
    np.testing.assert_array_equal(tp, t2)


@given(st.lists(st.floats(0.0, 0.1), min_size=2, max_size=30), st.floats(0.5, 20.0))
def test_atr_monotone(vals, Lm):
    A = np.array(vals)
    t = atr_to_transmissivity(_abs(A), AtrConversionConfig(100.0, Lm)).values
    order = np.argsort(A)
    assert np.all(np.diff(t[order]) <= 1e-15)
    t_long = atr_to_transmissivity(_abs(A), AtrConversionConfig(100.0, Lm * 1.5)).values
    assert np.all(t_long <= t + 1e-15)


def test_atr_errors():
    with pytest.raises(DataError, match="baseline"):
        atr_to_transmissivity(_abs([0.01, -0.001]), AtrConversionConfig())
    t = atr_to_transmissivity(_abs([0.01, -0.001]), AtrConversionConfig(), negative_tolerance=0.002)
    assert t.values[1] == 1.0
    with pytest.raises(DataError):
        atr_to_transmissivity(Spectrum([1, 2], [0.1, 0.2], "cm-1", "arbitrary"), AtrConversionConfig())
    with pytest.raises(ConfigError):
        AtrConversionConfig(0.0, 6.0)
    with pytest.raises(ConfigError):
        AtrConversionConfig(100.0, 6.0, 0)


def test_convert_examples():
    s = Spectrum([1666.67], [1.0], "cm-1")
    assert convert_axis(s, "um").axis[0] == pytest.approx(6.000, abs=1e-4)
    s = Spectrum([6.66], [1.0], "um")
    assert convert_axis(s, "nm", 660.0).axis[0] == pytest.approx(732.6, abs=0.05)
    with pytest.raises(ConfigError):
        convert_axis(s, "nm")
    with pytest.raises(ConfigError):
        convert_axis(Spectrum([740.0], [1.0], "nm"), "um")


@given(st.lists(st.integers(5000, 40000), min_size=1, max_size=50, unique=True))
def test_convert_round_trip(vals):
    # 0.1 cm-1 spacing keeps converted axes strictly monotone
    s = Spectrum(np.sort(vals) / 10.0, np.arange(len(vals), dtype=float), "cm-1")
    back = convert_axis(convert_axis(s, "um"), "cm-1")
    np.testing.assert_allclose(back.axis, s.axis, rtol=1e-10)
    np.testing.assert_array_equal(back.values, s.values)
    back = convert_axis(convert_axis(s, "nm", 660.0), "cm-1", 660.0)
    np.testing.assert_allclose(back.axis, s.axis, rtol=1e-10)


def test_spectrum_invariants():
    with pytest.raises(DataError):
        Spectrum([1, 1], [0, 0], "cm-1")
    with pytest.raises(DataError):
        Spectrum([1, 2], [0.5, 1.5], "um", "transmissivity_amplitude")
    with pytest.raises(ConfigError):
        Spectrum([1, 2], [0, 0], "parsec")
    assert Spectrum([1, 2], [0, 0], "μm").unit == "um"


def test_amide_warning():
    axis = np.arange(1500.0, 1750.0)
    good = Spectrum(axis, np.exp(-0.5 * ((axis - 1655) / 10) ** 2), "cm-1", "absorbance")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_amide_band(good) == 1655.0
    bad = Spectrum(axis, np.exp(-0.5 * ((axis - 1545) / 10) ** 2), "cm-1", "absorbance")
    with pytest.warns(UserWarning, match="outside the amide I band"):
        check_amide_band(bad)
