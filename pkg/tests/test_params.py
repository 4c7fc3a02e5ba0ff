import math

import pytest

from kerrlep import ConfigError, SystemParams, cat_basis_params, reference_params

# frozen with 50-digit arithmetic from K/2pi = 6.7 MHz, P/2pi = 15.5 MHz
ALPHA = 1.5209973161780712
OVERLAP_E = 0.0097853816859712857
P_RATIO = 0.99026203007308885
P2_MINUS = 0.039145275048602666
P2_PLUS = 2.0003830514575529
P4_PLUS = 2.0015323525586308


def test_paper_point_derived_values(cat):
    assert cat.alpha == pytest.approx(ALPHA, rel=1e-14)
    assert cat.overlap_e == pytest.approx(OVERLAP_E, rel=1e-13)
    assert cat.p == pytest.approx(P_RATIO, rel=1e-13)
    assert cat.p2_minus == pytest.approx(P2_MINUS, rel=1e-12)
    assert cat.p2_plus == pytest.approx(P2_PLUS, rel=1e-13)
    assert cat.p4_plus == pytest.approx(P4_PLUS, rel=1e-13)
    # the headline amplitude quoted for this working point
    assert abs(cat.alpha - 1.52) < 2e-3


def test_p2_minus_identity(cat):
    e = cat.overlap_e
    assert cat.p2_minus == pytest.approx(4 * e / (1 - e * e), abs=1e-12)


def test_normalizations(cat):
    e = cat.overlap_e
    assert cat.norm_plus == pytest.approx(1 / math.sqrt(2 * (1 + e)), rel=1e-14)
    assert cat.norm_minus == pytest.approx(1 / math.sqrt(2 * (1 - e)), rel=1e-14)
    assert cat.p == pytest.approx(cat.norm_plus / cat.norm_minus, rel=1e-14)
    assert 0.0 < cat.p < 1.0


def test_large_alpha_limit_monotone():
    prev_p, prev_p2m = 0.0, math.inf
    for alpha in [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]:
        params = SystemParams(delta=0.0, kerr=1.0, drive=alpha * alpha, kappa=0.01)
        c = cat_basis_params(params)
        assert c.p > prev_p
        assert c.p2_minus < prev_p2m
        prev_p, prev_p2m = c.p, c.p2_minus
    assert prev_p > 0.9999
    assert prev_p2m < 1e-4


def test_l_phi_nonpositive():
    for kphi_rel in [0.0, 0.1, 1.0]:
        params = reference_params(kappa_phi=kphi_rel * reference_params().kappa)
        c = cat_basis_params(params)
        assert c.l_phi <= 0.0


def test_l_phi_value():
    params = reference_params(kappa_phi=reference_params().kappa)
    c = cat_basis_params(params)
    assert c.l_phi / (2 * math.pi) == pytest.approx(-41.005536000338466, rel=1e-12)


def test_alpha_property(params):
    assert params.alpha == pytest.approx(math.sqrt(15.5 / 6.7), rel=1e-15)


def test_from_frequencies_round_trip():
    p = SystemParams.from_frequencies(delta_hz=1e3, kerr_hz=6.7e6,
                                      drive_hz=15.5e6, kappa_hz=1e4)
    assert p.delta == pytest.approx(2 * math.pi * 1e3)
    assert p.kerr == pytest.approx(2 * math.pi * 6.7e6)


def test_validation_collects_every_violation():
    with pytest.raises(ConfigError) as err:
        SystemParams(delta=0.0, kerr=-1.0, drive=0.0, kappa=-2.0, kappa_phi=-3.0)
    text = str(err.value)
    assert "kerr" in text and "drive" in text
    assert "kappa must be >= 0" in text and "kappa_phi" in text
    assert len(err.value.violations) == 4


def test_validation_rejects_non_finite():
    with pytest.raises(ConfigError):
        SystemParams(delta=math.nan, kerr=1.0, drive=1.0, kappa=0.0)
