"""Gumbel noise, hard/soft symbol sampling, and the averaged gradient estimator.

Monte Carlo claims are checked against exact binomial quantiles from scipy
rather than normal approximations.
"""

import numpy as np
import pytest
from scipy import stats

from jcmlab import autodiff as ad
from jcmlab.autodiff import Tensor
from jcmlab.encoder import EPS_P
from jcmlab.errors import DomainError
from jcmlab.sampler import (
    GumbelNoise,
    SymbolBlock,
    gumbel_from_uniform,
    reparam_grad_estimate,
    sample_hard,
    sample_soft,
)


def binomial_band(p, n, coverage=0.997):
    """Exact central binomial interval on the count of successes."""
    alpha = (1.0 - coverage) / 2.0
    return stats.binom.ppf(alpha, n, p), stats.binom.ppf(1.0 - alpha, n, p)


class TestGumbelFromUniform:
    def test_exp_minus_one_maps_to_zero(self):
        assert gumbel_from_uniform(np.exp(-1.0)) == pytest.approx(0.0, abs=1e-12)

    def test_exp_minus_e_maps_to_minus_one(self):
        assert gumbel_from_uniform(np.exp(-np.e)) == pytest.approx(-1.0, rel=1e-12)

    def test_near_one_input_is_clamped_finite(self):
        g = gumbel_from_uniform(1.0 - 1e-15)
        assert np.isfinite(g)
        assert g == pytest.approx(gumbel_from_uniform(1.0 - 1e-12))

    def test_moments_match_gumbel_law(self):
        """Mean ~ Euler-Mascheroni and variance ~ pi^2/6 over 10^6 draws."""
        u = np.random.default_rng(0).uniform(size=10**6)
        g = gumbel_from_uniform(u)
        assert g.mean() == pytest.approx(np.euler_gamma, abs=0.01)
        assert g.var() == pytest.approx(np.pi**2 / 6.0, rel=0.01)


class TestSampleHard:
    def test_saturated_probability_nearly_always_plus_one(self):
        n = 10**5
        p = np.full((1, n), 1.0 - EPS_P)
        z = sample_hard(p, GumbelNoise.draw((1, n), 123)).values.data
        assert (z == 1.0).mean() >= 1.0 - 1e-4

    def test_frequencies_match_bernoulli_law(self):
        """+1 frequency sits inside the exact 99.7% binomial band for each p."""
        n = 10**5
        for k, prob in enumerate((0.1, 0.3, 0.5, 0.7, 0.9)):
            p = np.full((1, n), prob)
            z = sample_hard(p, GumbelNoise.draw((1, n), 77, k)).values.data
            lo, hi = binomial_band(prob, n)
            assert lo <= (z == 1.0).sum() <= hi, prob

    def test_same_seed_reproduces_block(self):
        p = np.random.default_rng(1).uniform(0.2, 0.8, size=(4, 6))
        a = sample_hard(p, GumbelNoise.draw((4, 6), 9, 0)).values.data
        b = sample_hard(p, GumbelNoise.draw((4, 6), 9, 0)).values.data
        assert np.array_equal(a, b)

    def test_output_is_hard_mode(self):
        p = np.full((2, 3), 0.5)
        block = sample_hard(p, GumbelNoise.draw((2, 3), 2))
        assert block.mode == "hard"
        assert np.all(np.isin(block.values.data, (-1.0, 1.0)))


class TestSampleSoft:
    def test_symmetric_input_gives_exact_zero(self):
        """p = 0.5 with identical noise fields puts the relaxation exactly at 0."""
        g = np.random.default_rng(3).gumbel(size=(2, 4))
        noise = GumbelNoise(g1=g, g2=g.copy())
        p = Tensor(np.full((2, 4), 0.5))
        z = sample_soft(p, noise, tau=0.7).values.data
        np.testing.assert_allclose(z, 0.0, atol=0.0)

    def test_cold_limit_matches_hard_rule(self):
        """At tau = 0.01 the soft sign equals the hard decision and saturates."""
        rng = np.random.default_rng(4)
        agree = saturated = checked = 0
        for i in range(1000):
            p_val = rng.uniform(0.05, 0.95, size=(1, 8))
            noise = GumbelNoise.draw((1, 8), 55, i)
            hard = sample_hard(p_val, noise).values.data
            soft = sample_soft(Tensor(p_val), noise, tau=0.01).values.data
            gap = np.abs(
                (np.log(p_val) + noise.g1) - (np.log1p(-p_val) + noise.g2)
            )
            live = gap > 1e-9
            agree += int(np.all(np.sign(soft[live]) == hard[live]))
            big = gap >= 0.1
            checked += big.sum()
            saturated += (np.abs(soft[big]) >= 0.999).sum()
        assert agree == 1000
        assert checked > 0 and saturated == checked

    def test_monotone_in_probability(self):
        """Raising any p_i under frozen noise never lowers the soft symbol."""
        rng = np.random.default_rng(5)
        noise = GumbelNoise.draw((1, 6), 13)
        grid = np.linspace(0.02, 0.98, 25)
        for _ in range(20):
            base = rng.uniform(0.05, 0.95, size=(1, 6))
            prev = None
            for v in grid:
                p = base.copy()
                p[0, 2] = v
                z = sample_soft(Tensor(p), noise, tau=0.5).values.data[0, 2]
                if prev is not None:
                    assert z >= prev - 1e-15
                prev = z

    def test_gradient_matches_finite_differences(self):
        p = Tensor(np.random.default_rng(6).uniform(0.2, 0.8, size=(2, 5)), requires_grad=True)
        noise = GumbelNoise.draw((2, 5), 21)
        err = ad.finite_diff_check(
            lambda: ad.tsum(sample_soft(p, noise, tau=0.6).values), [p]
        )
        assert err <= 1e-4

    def test_nonpositive_temperature_rejected(self):
        p = Tensor(np.full((1, 2), 0.5))
        noise = GumbelNoise.draw((1, 2), 1)
        for tau in (0.0, -1.0):
            with pytest.raises(DomainError):
                sample_soft(p, noise, tau)

    def test_soft_mode_entries_stay_strictly_inside(self):
        p = Tensor(np.full((1, 4), 1.0 - EPS_P))
        block = sample_soft(p, GumbelNoise.draw((1, 4), 8), tau=0.05)
        assert block.mode == "soft"
        assert np.all(np.abs(block.values.data) < 1.0)


class TestSymbolBlockInvariants:
    def test_hard_mode_rejects_fractional_entries(self):
        with pytest.raises(DomainError):
            SymbolBlock(values=Tensor([[0.5, 1.0]]), mode="hard")

    def test_soft_mode_rejects_saturated_entries(self):
        with pytest.raises(DomainError):
            SymbolBlock(values=Tensor([[1.0, 0.0]]), mode="soft", tau=0.5)

    def test_soft_mode_requires_temperature(self):
        with pytest.raises(DomainError):
            SymbolBlock(values=Tensor([[0.5]]), mode="soft")


class TestReparamEstimator:
    def _setup(self):
        w = Tensor(np.random.default_rng(7).normal(size=(1, 4)), requires_grad=True)
        c = Tensor(np.random.default_rng(8).normal(size=(1, 4)))

        def loss_fn(noise):
            p = ad.clip(ad.sigmoid(w), EPS_P, 1.0 - EPS_P)
            return ad.tsum(sample_soft(p, noise, tau=0.8).values * c)

        return w, loss_fn

    def test_single_draw_equals_plain_backward(self):
        w, loss_fn = self._setup()
        noise = GumbelNoise.draw((1, 4), 31, 0)
        (est,) = reparam_grad_estimate(loss_fn, [w], [noise])
        w.grad = None
        loss_fn(noise).backward()
        assert np.array_equal(est, w.grad)

    def test_more_draws_reduce_variance(self):
        """Per-component variance of the N=64 estimate is at most the N=1 variance."""
        w, loss_fn = self._setup()
        single, averaged = [], []
        for rep in range(100):
            draws = [GumbelNoise.draw((1, 4), 99, rep, m) for m in range(64)]
            (g1,) = reparam_grad_estimate(loss_fn, [w], draws[:1])
            (g64,) = reparam_grad_estimate(loss_fn, [w], draws)
            single.append(g1)
            averaged.append(g64)
        var1 = np.var(np.stack(single), axis=0)
        var64 = np.var(np.stack(averaged), axis=0)
        assert np.all(var64 <= var1)

    def test_fixed_seed_reproduces_estimate(self):
        w, loss_fn = self._setup()
        results = []
        for _ in range(2):
            draws = [GumbelNoise.draw((1, 4), 1234, m) for m in range(8)]
            (g,) = reparam_grad_estimate(loss_fn, [w], draws)
            results.append(g)
        assert np.array_equal(results[0], results[1])

    def test_empty_draw_list_rejected(self):
        w, loss_fn = self._setup()
        with pytest.raises(DomainError):
            reparam_grad_estimate(loss_fn, [w], [])
