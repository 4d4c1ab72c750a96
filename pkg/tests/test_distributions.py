import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from lejapce.distributions import (
    EULER_GAMMA,
    Gumbel,
    Normal,
    ProductDistribution,
    TruncatedNormal,
    Uniform,
    distribution_from_dict,
    sample,
)
from lejapce.exceptions import ConfigurationError
from lejapce.models import BUILTIN_MODELS, get_model

LAWS = [
    Uniform(-1, 1),
    Uniform(2, 7),
    Normal(0, 1),
    Normal(4, 1e-4),
    TruncatedNormal(0, 1, 0, 3),
    TruncatedNormal(0, 1, -3, 0),
    TruncatedNormal(0.1, 0.0161812**2, 0.05, 0.15),
    TruncatedNormal(3700, 4900**2, 100, 50000),
    TruncatedNormal(30, 100, 0, 60),
    Gumbel(0, 1),
    Gumbel(559495, 70173),
    Gumbel(208110, 3275),
]


def test_pdf_examples():
    assert Uniform(-1, 1).pdf(0.0) == 0.5
    assert Gumbel(0, 1).pdf(0.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert TruncatedNormal(0, 1, 0, 3).pdf(-0.5) == 0.0
    assert Uniform(-1, 1).pdf(1.5) == 0.0


def test_quantile_examples():
    assert Uniform(-1, 1).quantile(0.5) == 0.0
    assert Normal(0, 1).quantile(0.5) == 0.0
    assert Gumbel(0, 1).quantile(math.exp(-1)) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.2, float("nan")])
def test_quantile_rejects_levels_outside_open_interval(q):
    with pytest.raises(ValueError):
        Normal(0, 1).quantile(q)


def test_effective_support_examples():
    assert Uniform(-1, 1).effective_support() == (-1.0, 1.0)
    assert TruncatedNormal(0, 1, 0, 3).effective_support() == (0.0, 3.0)
    lo, hi = Normal(0, 1).effective_support()
    # scipy oracle for the 1e-8 quantile
    assert hi == pytest.approx(stats.norm.isf(1e-8), rel=1e-14)
    assert lo == -hi
    assert hi == pytest.approx(5.612, abs=1e-3)


def test_gumbel_effective_support_matches_scipy():
    lo, hi = Gumbel(0, 1).effective_support()
    assert lo == pytest.approx(stats.gumbel_r.ppf(1e-8), rel=1e-12)
    assert hi == pytest.approx(stats.gumbel_r.isf(1e-8), rel=1e-12)


@pytest.mark.parametrize("dist", LAWS, ids=repr)
def test_pdf_mass_on_effective_support(dist):
    lo, hi = dist.effective_support()
    mass, _ = integrate.quad(dist.pdf, lo, hi, points=[dist.median()], limit=200)
    assert mass >= 1 - 1e-6
    assert mass <= 1 + 1e-10


@pytest.mark.parametrize("dist", LAWS, ids=repr)
def test_quantile_cdf_round_trip(dist):
    q = np.linspace(0.005, 0.995, 100)
    y = dist.quantile(q)
    assert np.all(np.diff(y) > 0)
    back = dist.quantile(dist.cdf(y))
    np.testing.assert_allclose(back, y, rtol=1e-9, atol=1e-12 * np.max(np.abs(y)))


@pytest.mark.parametrize("dist", [d for d in LAWS if isinstance(d, TruncatedNormal)], ids=repr)
def test_truncated_normal_against_scipy(dist):
    ref = stats.truncnorm((dist.lo - dist.mu) / dist.sigma, (dist.hi - dist.mu) / dist.sigma,
                          loc=dist.mu, scale=dist.sigma)
    y = ref.ppf(np.linspace(0.01, 0.99, 25))
    np.testing.assert_allclose(dist.pdf(y), ref.pdf(y), rtol=1e-10)
    np.testing.assert_allclose(dist.cdf(y), ref.cdf(y), rtol=1e-10, atol=1e-14)
    assert dist.mean == pytest.approx(ref.mean(), rel=1e-10)
    assert dist.median() == pytest.approx(ref.median(), rel=1e-10)


def test_truncated_standard_normal_moments():
    # Quadrature oracle (scipy agrees): mean 0.7911568..., median 0.6723672...
    d = TruncatedNormal(0, 1, 0, 3)
    assert d.mean == pytest.approx(0.791156826063417, abs=1e-12)
    assert d.median() == pytest.approx(0.6723672950630585, abs=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [
        lambda: Uniform(1, 1),
        lambda: Normal(0, 0),
        lambda: TruncatedNormal(0, 1, 2, 1),
        lambda: TruncatedNormal(0, -1, 0, 1),
        lambda: Gumbel(0, 0),
    ],
)
def test_invalid_parameters_rejected(kwargs):
    with pytest.raises(ConfigurationError):
        kwargs()


@pytest.mark.parametrize("dist", LAWS, ids=repr)
def test_json_round_trip(dist):
    assert distribution_from_dict(dist.to_dict()) == dist


def test_json_spec_uses_variance():
    d = distribution_from_dict({"kind": "truncated_normal", "mu": 0, "var": 4, "lo": 0, "hi": 3})
    assert d.sigma == 2.0
    with pytest.raises(ConfigurationError):
        distribution_from_dict({"kind": "normal", "mu": 0, "sigma": 1})
    with pytest.raises(ConfigurationError):
        distribution_from_dict({"kind": "beta", "a": 1})


def test_sample_is_deterministic():
    p = ProductDistribution((Uniform(-1, 1), Gumbel(0, 1), TruncatedNormal(0, 1, 0, 3)))
    a = sample(p, 50, seed=9)
    b = sample(p, 50, seed=9)
    assert a.shape == (50, 3)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample(p, 50, seed=10))
    assert sample(p, 1, seed=3).tobytes() == sample(p, 1, seed=3).tobytes()


def test_sample_count_must_be_positive():
    with pytest.raises(ValueError):
        sample(ProductDistribution((Uniform(0, 1),)), 0, seed=1)


def test_uniform_sample_mean():
    y = sample(ProductDistribution((Uniform(-1, 1),) * 3), 10**5, seed=2024)
    assert np.all(np.abs(y.mean(axis=0)) < 0.02)


def test_gumbel_sample_mean():
    y = sample(ProductDistribution((Gumbel(0, 1),)), 10**5, seed=7)
    assert abs(y.mean() - EULER_GAMMA) < 0.02


@pytest.mark.parametrize("name", BUILTIN_MODELS)
def test_samples_stay_in_support(name):
    p = get_model(name).input_spec
    y = sample(p, 2000, seed=5)
    for n, d in enumerate(p):
        lo, hi = d.support
        assert np.all((y[:, n] >= lo) & (y[:, n] <= hi))


@settings(max_examples=60, deadline=None)
@given(
    mu=st.floats(-100, 100),
    sigma=st.floats(0.01, 50),
    a=st.floats(-4, 3.5),
    width=st.floats(0.2, 6),
    q=st.floats(1e-6, 1 - 1e-6),
)
def test_truncated_normal_quantile_inverts_cdf(mu, sigma, a, width, q):
    d = TruncatedNormal(mu, sigma**2, mu + a * sigma, mu + (a + width) * sigma)
    y = d.quantile(q)
    assert d.lo <= y <= d.hi
    assert d.cdf(y) == pytest.approx(q, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(shift=st.floats(-100, 100), scale=st.floats(1e-3, 1e4), q=st.floats(1e-9, 1 - 1e-9))
def test_gumbel_quantile_inverts_cdf(shift, scale, q):
    # loc within 100 scales keeps the standardization well conditioned
    d = Gumbel(shift * scale, scale)
    assert d.cdf(d.quantile(q)) == pytest.approx(q, rel=1e-9, abs=1e-12)
