import json
import math

import numpy as np
import pytest
from scipy import stats as sps

from qmeasure import analytic as an
from qmeasure import samplers as sm
from qmeasure import stats as st
from qmeasure.exceptions import ConfigurationError, DomainError
from qmeasure.linalg import jacobi_eigh


def uniform_cdf(x):
    return np.clip(x, 0, 1)


# -- KS ---------------------------------------------------------------------------------

def test_ks_same_law_small_statistic():
    x = np.random.default_rng(0).random(100_000)
    rep = st.ks_test(x, uniform_cdf)
    assert rep.statistic < 0.01 and rep.passed
    assert rep.threshold == pytest.approx(1.63 / math.sqrt(100_000))


def test_ks_constant_samples_fail():
    assert st.ks_statistic(np.full(1000, 0.5), uniform_cdf) >= 0.5
    assert not st.ks_test(np.full(1000, 0.5), uniform_cdf).passed


def test_ks_deterministic():
    a = st.ks_statistic(sm.RngStream(4).generator().random(1000), uniform_cdf)
    b = st.ks_statistic(sm.RngStream(4).generator().random(1000), uniform_cdf)
    assert a == b


def test_ks_matches_scipy():
    x = np.random.default_rng(1).beta(2, 3, 5000)
    ref = sps.kstest(x, sps.beta(2, 3).cdf)
    rep = st.ks_test(x, sps.beta(2, 3).cdf)
    assert rep.statistic == pytest.approx(ref.statistic, abs=1e-15)


def test_ks_errors():
    with pytest.raises(DomainError):
        st.ks_statistic([], uniform_cdf)
    with pytest.raises(ConfigurationError):
        st.ks_test(np.random.default_rng(0).random(999), uniform_cdf)
    assert st.ks_test(np.linspace(0.05, 0.95, 10), uniform_cdf, threshold=0.2).passed


def test_ks_2sample_matches_scipy():
    g = np.random.default_rng(2)
    a, b = g.normal(size=3000), g.normal(0.1, size=2000)
    rep = st.ks_2sample(a, b)
    assert rep.statistic == pytest.approx(sps.ks_2samp(a, b).statistic, abs=1e-15)
    with pytest.raises(DomainError):
        st.ks_2sample([], b)


# -- chi-square on spectra --------------------------------------------------------------

def induced(m, n, seed, k):
    w, _ = jacobi_eigh(sm.sample_induced((m, n), sm.RngStream(seed), k))
    return w


def test_chi_square_induced_33_passes():
    rep = st.chi_square_simplex(induced(3, 3, 1, 100_000), an.EigenDensity("induced", 3, 3))
    assert rep.passed and rep.test == "ChiSquare" and rep.dof > 50


def test_chi_square_induced_22_vs_hs():
    assert st.chi_square_simplex(induced(2, 2, 2, 100_000), an.EigenDensity("hs", 2)).passed


def test_chi_square_negative_controls():
    bures = sm.sample_simplex_density(2, "bures", sm.RngStream(3), 100_000)
    assert st.chi_square_simplex(bures, an.EigenDensity("bures", 2)).passed
    assert not st.chi_square_simplex(bures, an.EigenDensity("uniform", 2)).passed
    bures3 = sm.sample_simplex_density(3, "bures", sm.RngStream(4), 100_000)
    assert st.chi_square_simplex(bures3, an.EigenDensity("bures", 3)).passed
    assert not st.chi_square_simplex(bures3, an.EigenDensity("uniform", 3)).passed
    assert not st.chi_square_simplex(induced(3, 5, 5, 100_000), an.EigenDensity("induced", 3, 3)).passed


def test_chi_square_cells_have_exact_masses():
    # uniform density on the m=2 chamber: masses are interval lengths
    lam = sm.sample_simplex_density(2, "uniform", sm.RngStream(6), 20_000)
    rep = st.chi_square_simplex(lam, an.EigenDensity("uniform", 2), bins=10)
    assert rep.dof == 9 and rep.passed


def test_chi_square_errors():
    dens = an.EigenDensity("hs", 2)
    with pytest.raises(ConfigurationError):
        st.chi_square_simplex(np.array([[0.7, 0.3], [0.6, 0.4], [0.9, 0.1]]), dens)
    with pytest.raises(ConfigurationError):
        st.chi_square_simplex(np.full((10, 3), 1 / 3), dens)
    with pytest.raises(ConfigurationError):
        st.chi_square_simplex(np.full((10, 4), 0.25), an.EigenDensity("hs", 4))


# -- summaries --------------------------------------------------------------------------

def test_mean_with_stderr_examples():
    assert st.mean_with_stderr([0.0, 1.0]) == (0.5, 0.5)
    mean, se = st.mean_with_stderr(np.random.default_rng(0).random(1_000_000))
    assert abs(mean - 0.5) < 0.001 and se == pytest.approx(math.sqrt(1 / 12 / 1e6), rel=0.01)
    assert st.mean_with_stderr(np.full(50, 0.3))[1] == 0.0
    with pytest.raises(DomainError):
        st.mean_with_stderr([1.0])


def test_histogram_merge_conserves_counts():
    g = np.random.default_rng(0)
    x, y = g.random(500), g.random(700)
    edges = np.linspace(0, 1, 11)
    h = st.Histogram.from_samples(x, edges).merge(st.Histogram.from_samples(y, edges))
    whole = st.Histogram.from_samples(np.concatenate([x, y]), edges)
    np.testing.assert_array_equal(h.counts, whole.counts)
    assert h.total == 1200
    with pytest.raises(DomainError):
        h.merge(st.Histogram.from_samples(x, np.linspace(0, 1, 6)))


def test_histogram_round_trip():
    h = st.Histogram([0, 0.5, 1], [3, 4])
    assert st.Histogram.from_dict(json.loads(json.dumps(h.to_dict()))).counts.tolist() == [3, 4]
    with pytest.raises(DomainError):
        st.Histogram.from_dict({"edges": [0, 1], "counts": [2], "total": 5})
    with pytest.raises(DomainError):
        st.Histogram([1, 0], [1])


def test_gof_report_round_trip():
    rep = st.ks_test(np.random.default_rng(0).random(2000), uniform_cdf)
    d = json.loads(rep.to_json())
    assert d["pass"] is True and "passed" not in d
    assert st.GofReport.from_dict(d) == rep
