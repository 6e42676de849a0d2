"""Self-check suites behind the ``verify`` subcommand.

Four independent suites, each returning a SuiteResult with per-check
report lines: analytic bound slack on enumerable systems, end-to-end
gradient fidelity against finite differences, sampler frequencies against
exact binomial bands, and normalization identities (PMF mass and
marginals, softmax rows, channel noise variance).

Check inputs are injectable (e.g. ``pmf_table_fn``) so the test suite can
prove a deliberately corrupted implementation is caught, not just that the
shipped one passes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import autodiff as ad
from .channel import ChannelConfig, awgn_apply, snr_to_sigma
from .decoders import JcmModel, jcm_loss
from .encoder import EPS_P, bernoulli_pmf_table, enumerate_symbol_blocks
from .oracle import random_system, verify_bounds
from .sampler import GumbelNoise, sample_hard
from .seeding import derive_rng

BOUND_SLACK_TOL = 1e-9
BOUND_TIGHT_TOL = 1e-12
GRAD_TOL = 1e-4
PMF_TOL = 1e-9
SOFTMAX_TOL = 1e-12
AWGN_REL_TOL = 0.01


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    lines: tuple[str, ...]

    def report(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        body = "\n".join(f"  {line}" for line in self.lines)
        return f"[{status}] {self.name}\n{body}"


def suite_bounds(systems: int = 120, trials: int = 8, lam: float = 1.0, seed: int = 0) -> SuiteResult:
    """Random enumerable systems: objective minus bound must stay >= -tol.

    Also checks the two algebraic forms of the bound agree and that the
    bound is tight when the decoders are the exact posteriors.
    """
    rng = derive_rng(seed, "verify-bounds")
    min_slack = np.inf
    max_gap = 0.0
    max_tight = 0.0
    rows = []
    for idx in range(systems):
        sys_i = random_system(rng)
        rep = verify_bounds(sys_i, lam, trials, rng)
        min_slack = min(min_slack, rep.min_slack)
        max_gap = max(max_gap, rep.max_form_gap)
        max_tight = max(max_tight, abs(rep.tight_slack))
        if idx < 10:
            rows.append(
                f"system {idx}: n={sys_i.n} classes={sys_i.p_sx.shape[0]} "
                f"min_slack={rep.min_slack:+.3e} tight_slack={rep.tight_slack:+.3e}"
            )
    passed = min_slack >= -BOUND_SLACK_TOL and max_gap <= BOUND_TIGHT_TOL and max_tight <= BOUND_SLACK_TOL
    rows.append(f"systems={systems} decoder_draws={trials} lambda={lam}")
    rows.append(f"min slack over all draws: {min_slack:+.3e} (tolerance -{BOUND_SLACK_TOL:g})")
    rows.append(f"max |flat - nested| form gap: {max_gap:.3e} (tolerance {BOUND_TIGHT_TOL:g})")
    rows.append(f"max |slack| at exact posteriors: {max_tight:.3e} (tolerance {BOUND_SLACK_TOL:g})")
    return SuiteResult("bounds", passed, tuple(rows))


def suite_gradients(
    source_dim: int = 8,
    n: int = 8,
    classes: int = 2,
    hidden: tuple[int, ...] = (8,),
    batch: int = 4,
    seed: int = 0,
    tol: float = GRAD_TOL,
) -> SuiteResult:
    """Finite-difference check of the full training loss with frozen noise."""
    rng = derive_rng(seed, "verify-grad")
    model = JcmModel.build(source_dim, n, classes, hidden, hidden, rng)
    x = rng.uniform(0.0, 1.0, size=(batch, source_dim))
    labels = np.eye(classes)[rng.integers(0, classes, size=batch)]
    noise = GumbelNoise.draw((batch, n), seed, 0, 0)
    chan = ChannelConfig(kind="awgn", snr_db=4.0, seed=seed)

    def objective():
        return jcm_loss(x, labels, model, chan, noise, 0.7, 1.0, 0, 0).loss

    params = model.parameters()
    count = sum(p.data.size for p in params)
    max_rel = float(ad.finite_diff_check(objective, params, h=1e-5))
    passed = max_rel <= tol
    lines = (
        f"model: d={source_dim} n={n} M={classes} hidden={hidden} batch={batch}",
        f"parameters checked: {count}",
        f"max relative gradient error: {max_rel:.3e} (tolerance {tol:g})",
    )
    return SuiteResult("gradients", passed, lines)


def suite_sampler(
    draws: int = 100_000,
    probs: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9),
    seeds: tuple[int, ...] = (0, 1, 2),
    confidence: float = 0.997,
) -> SuiteResult:
    """Hard-sampler +1 frequencies against exact central binomial intervals."""
    alpha = (1.0 - confidence) / 2.0
    rows = []
    passed = True
    for seed in seeds:
        for col, p in enumerate(probs):
            noise = GumbelNoise.draw((draws, len(probs)), seed, col)
            p_mat = np.full((draws, len(probs)), 0.5)
            p_mat[:, col] = p
            z = sample_hard(p_mat, noise).values.data
            count = int((z[:, col] > 0).sum())
            lo = int(stats.binom.ppf(alpha, draws, p))
            hi = int(stats.binom.ppf(1.0 - alpha, draws, p))
            ok = lo <= count <= hi
            passed = passed and ok
            rows.append(
                f"seed={seed} p={p}: count {count} in [{lo}, {hi}]"
                + ("" if ok else "  <-- OUT OF BAND")
            )
    rows.append(f"draws per cell: {draws}, central interval {confidence:.3%}")
    return SuiteResult("sampler", passed, tuple(rows))


def suite_normalization(
    max_n: int = 10,
    seed: int = 0,
    pmf_table_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    awgn_draws: int = 1_000_000,
    snr_db: float = 3.0,
) -> SuiteResult:
    """Exhaustive PMF mass/marginal identities, softmax rows, AWGN variance.

    ``pmf_table_fn(p, blocks) -> (2**n,)`` may be injected; the default is
    the shipped product-Bernoulli table.  The marginal identity (mass of
    blocks with symbol i = +1 equals p_i) pins the exponent pairing, so a
    swapped-exponent bug fails here even though total mass stays 1.
    """
    table_fn = pmf_table_fn if pmf_table_fn is not None else bernoulli_pmf_table
    rng = derive_rng(seed, "verify-norm")
    rows = []
    passed = True

    worst_mass = 0.0
    worst_marginal = 0.0
    for n in range(1, max_n + 1):
        p = rng.uniform(EPS_P, 1.0 - EPS_P, size=n)
        blocks = enumerate_symbol_blocks(n)
        table = np.asarray(table_fn(p, blocks), dtype=np.float64)
        if table.shape != (2**n,):
            rows.append(f"n={n}: pmf table has shape {table.shape}, expected {(2**n,)}")
            passed = False
            continue
        mass_err = abs(float(table.sum()) - 1.0)
        marg = (table[:, None] * (blocks > 0)).sum(axis=0)
        marg_err = float(np.max(np.abs(marg - p)))
        worst_mass = max(worst_mass, mass_err)
        worst_marginal = max(worst_marginal, marg_err)
        if table.min() < 0.0:
            rows.append(f"n={n}: pmf table has negative entries")
            passed = False
    passed = passed and worst_mass <= PMF_TOL and worst_marginal <= PMF_TOL
    rows.append(f"pmf total mass: worst |sum-1| = {worst_mass:.3e} over n=1..{max_n} (tol {PMF_TOL:g})")
    rows.append(f"pmf marginals: worst |P(z_i=+1) - p_i| = {worst_marginal:.3e} (tol {PMF_TOL:g})")

    logits = rng.normal(0.0, 3.0, size=(64, 7))
    probs = ad.softmax(ad.Tensor(logits)).data
    softmax_err = float(np.max(np.abs(probs.sum(axis=1) - 1.0)))
    ok = softmax_err <= SOFTMAX_TOL
    passed = passed and ok
    rows.append(f"softmax row sums: worst |sum-1| = {softmax_err:.3e} (tol {SOFTMAX_TOL:g})")

    sigma = snr_to_sigma(snr_db)
    cfg = ChannelConfig(kind="awgn", snr_db=snr_db, seed=seed)
    zeros = np.zeros((awgn_draws // 1000, 1000))
    noise = awgn_apply(zeros, cfg, 0)
    var = float(noise.data.var())
    rel = abs(var - sigma**2) / sigma**2
    ok = rel <= AWGN_REL_TOL
    passed = passed and ok
    rows.append(
        f"awgn variance: measured {var:.6f} vs sigma^2 {sigma**2:.6f} "
        f"(rel err {rel:.4%}, tol {AWGN_REL_TOL:.0%}, draws {zeros.size})"
    )

    hard = sample_hard(
        np.full((1000, 8), 0.37),
        GumbelNoise.draw((1000, 8), seed, 99),
    ).values.data
    power = float(np.mean(hard**2))
    ok = power == 1.0
    passed = passed and ok
    rows.append(f"hard symbols unit power: mean(z^2) = {power} (exact)")

    return SuiteResult("normalization", passed, tuple(rows))


def run_all(seed: int = 0, suites: tuple[str, ...] = ("bounds", "gradients", "sampler", "normalization")) -> list[SuiteResult]:
    registry: dict[str, Callable[[], SuiteResult]] = {
        "bounds": lambda: suite_bounds(seed=seed),
        "gradients": lambda: suite_gradients(seed=seed),
        "sampler": lambda: suite_sampler(seeds=(seed, seed + 1, seed + 2)),
        "normalization": lambda: suite_normalization(seed=seed),
    }
    results = []
    for name in suites:
        if name not in registry:
            raise KeyError(f"unknown verification suite {name!r}")
        results.append(registry[name]())
    return results
