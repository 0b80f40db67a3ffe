import math

import numpy as np
import pytest

from aoiharvest.geometry import (
    DiscPpp,
    cdf_farthest_normalized,
    cdf_nearest_normalized,
    pdf_farthest,
    pdf_nearest,
    pdf_farthest_normalized,
    pdf_nearest_normalized,
    pmf_count,
    sample_batch,
    sample_realization,
    truncated_mean_count,
)
from aoiharvest.model import NetworkConfig
from aoiharvest.quadrature import integrate_adaptive

from oracles import poisson_pmf_exact

DEFAULT = DiscPpp.from_config(NetworkConfig())


def test_mean_count_identity():
    assert DEFAULT.mean_count == 0.003 * math.pi * 60.0**2
    assert DEFAULT.mean_count == pytest.approx(33.9292, abs=1e-4)
    assert 0 < DEFAULT.prob_at_least_two <= 1


def test_sampling_always_at_least_two():
    sparse = DiscPpp(density=0.5 / (math.pi * 1.0**2), radius=1.0)  # mean count 0.5
    rng = np.random.default_rng(0)
    for _ in range(200):
        re = sample_realization(sparse, rng)
        assert re.count >= 2


def test_sampled_distances_sorted_and_in_disc():
    rng = np.random.default_rng(1)
    for _ in range(50):
        re = sample_realization(DEFAULT, rng)
        d = re.distances
        assert np.all(np.diff(d) >= 0)
        assert d[0] == d.min() and d[-1] == d.max()
        assert np.all((0 < d) & (d <= DEFAULT.radius))


def test_empirical_truncated_mean_within_one_percent():
    counts, _, _, _ = sample_batch(DEFAULT, 100_000, np.random.default_rng(2))
    expected = truncated_mean_count(DEFAULT)
    assert expected == pytest.approx(33.9292, abs=1e-3)  # truncation shift is negligible here
    assert counts.mean() == pytest.approx(expected, rel=0.01)


def test_sampling_is_seed_reproducible():
    a = sample_realization(DEFAULT, 1234)
    b = sample_realization(DEFAULT, 1234)
    assert np.array_equal(a.distances, b.distances)
    assert np.array_equal(a.gains, b.gains)


def test_pdf_values_and_domain():
    assert pdf_nearest(0.0, DEFAULT) == 0.0
    assert pdf_farthest(0.0, DEFAULT) == 0.0
    lam_pi = DEFAULT.density * math.pi
    r = 10.0
    manual = 2 * lam_pi * r * math.exp(-lam_pi * r * r) / DEFAULT.prob_at_least_two
    assert pdf_nearest(r, DEFAULT) == pytest.approx(manual, rel=1e-14)
    edge = 2 * lam_pi * DEFAULT.radius / DEFAULT.prob_at_least_two
    assert pdf_farthest(DEFAULT.radius, DEFAULT) == pytest.approx(edge, rel=1e-14)
    for bad in (-1.0, DEFAULT.radius + 1e-9):
        with pytest.raises(ValueError):
            pdf_nearest(bad, DEFAULT)
        with pytest.raises(ValueError):
            pdf_farthest(bad, DEFAULT)


@pytest.mark.parametrize("pdf", [pdf_nearest, pdf_farthest])
def test_pdf_mass_matches_antiderivative(pdf):
    # both densities carry mass (1 - e^{-m}) / P[K >= 2] on [0, R]
    ppp = DiscPpp(density=0.003, radius=20.0)  # small disc so the mass visibly exceeds 1
    res = integrate_adaptive(lambda r: pdf(r, ppp), 0.0, ppp.radius)
    expected = -math.expm1(-ppp.mean_count) / ppp.prob_at_least_two
    assert expected > 1.0
    assert res.value == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("pdf", [pdf_nearest_normalized, pdf_farthest_normalized])
def test_normalized_pdf_has_unit_mass(pdf):
    ppp = DiscPpp(density=0.003, radius=20.0)
    res = integrate_adaptive(lambda r: pdf(r, ppp), 0.0, ppp.radius)
    assert res.value == pytest.approx(1.0, abs=1e-8)


def test_pdfs_nonnegative_and_continuous():
    r = np.linspace(0.0, DEFAULT.radius, 2001)
    for pdf in (pdf_nearest, pdf_farthest):
        v = pdf(r, DEFAULT)
        assert np.all(v >= 0)
        assert np.max(np.abs(np.diff(v))) < 0.05  # no jumps on a fine grid


def _ks_distance(samples, cdf):
    samples = np.sort(samples)
    n = samples.size
    grid = cdf(samples, DEFAULT)
    upper = np.abs(np.arange(1, n + 1) / n - grid)
    lower = np.abs(np.arange(0, n) / n - grid)
    return max(upper.max(), lower.max())


def test_distance_distributions_match_normalized_forms():
    counts, starts, d, _ = sample_batch(DEFAULT, 100_000, np.random.default_rng(42))
    d1 = d[starts]
    dk = d[starts + counts - 1]
    assert _ks_distance(d1, cdf_nearest_normalized) < 0.01
    assert _ks_distance(dk, cdf_farthest_normalized) < 0.01


def test_pmf_count_values():
    assert pmf_count(0, DEFAULT) == pytest.approx(math.exp(-DEFAULT.mean_count), rel=1e-12)
    assert pmf_count(34, DEFAULT) == pytest.approx(poisson_pmf_exact(34, DEFAULT.mean_count), rel=1e-10)
    ks = np.arange(0, 200)
    assert pmf_count(ks, DEFAULT).sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        pmf_count(-1, DEFAULT)
    with pytest.raises(ValueError):
        pmf_count(1.5, DEFAULT)


def test_joint_product_identity():
    # The product of the two density forms is the exact joint density of
    # (nearest, farthest) given K >= 2 on the ordered region: its mass there
    # is 1 / P[K >= 2], which the Poisson-count weight (summed from k = 2)
    # turns into exactly 1 inside the bound integrals.
    ppp = DiscPpp(density=0.003, radius=20.0)

    def outer(r1s):
        r1s = np.atleast_1d(r1s)
        out = np.empty(r1s.shape)
        for i, r1 in enumerate(r1s):
            res = integrate_adaptive(lambda r2: pdf_farthest(r2, ppp), r1, ppp.radius)
            out[i] = pdf_nearest(r1, ppp) * res.value
        return out

    total = integrate_adaptive(outer, 0.0, ppp.radius)
    assert total.value == pytest.approx(1.0 / ppp.prob_at_least_two, abs=1e-6)
    assert total.value * ppp.prob_at_least_two == pytest.approx(1.0, abs=1e-6)
