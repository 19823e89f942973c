import numpy as np
import pytest
import scipy.special
import scipy.stats

from changebench import distributions as dist


GRID_P = [0.001, 0.01, 0.025, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.975, 0.99, 0.999]
GRID_DF = [1, 2, 3, 5, 10, 30, 120, 500]


def test_norm_cdf_matches_scipy():
    for x in np.linspace(-8, 8, 41):
        assert dist.norm_cdf(x) == pytest.approx(scipy.stats.norm.cdf(x), abs=1e-14)


def test_norm_ppf_matches_scipy():
    for p in GRID_P:
        assert dist.norm_ppf(p) == pytest.approx(scipy.stats.norm.ppf(p), abs=1e-9)


def test_norm_ppf_round_trip():
    for p in GRID_P:
        assert dist.norm_cdf(dist.norm_ppf(p)) == pytest.approx(p, abs=1e-12)


def test_betainc_matches_scipy():
    for a in [0.5, 1.0, 2.5, 10.0]:
        for b in [0.5, 1.0, 4.0]:
            for x in [0.0, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0]:
                assert dist.betainc_reg(a, b, x) == pytest.approx(
                    scipy.special.betainc(a, b, x), abs=1e-12
                )


def test_t_sf_matches_scipy():
    for df in GRID_DF:
        for x in [-5.0, -1.3, 0.0, 0.7, 2.1, 6.0]:
            assert dist.t_sf(x, df) == pytest.approx(scipy.stats.t.sf(x, df), abs=1e-12)


def test_t_ppf_matches_scipy():
    for df in GRID_DF:
        for p in GRID_P:
            assert dist.t_ppf(p, df) == pytest.approx(scipy.stats.t.ppf(p, df), abs=1e-8, rel=1e-8)


def test_t_ppf_975_df1_textbook_value():
    assert dist.t_ppf(0.975, 1) == pytest.approx(12.7062047362, abs=1e-6)


def test_f_sf_matches_scipy():
    for d1 in [1, 2, 5, 10]:
        for d2 in [1, 4, 20, 200]:
            for x in [0.0, 0.5, 1.0, 2.5, 10.0]:
                assert dist.f_sf(x, d1, d2) == pytest.approx(
                    scipy.stats.f.sf(x, d1, d2), abs=1e-12
                )


def test_invalid_arguments():
    with pytest.raises(ValueError):
        dist.norm_ppf(1.5)
    with pytest.raises(ValueError):
        dist.t_ppf(0.5, 0)
    with pytest.raises(ValueError):
        dist.f_sf(1.0, 0, 5)
