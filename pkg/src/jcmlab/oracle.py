"""Exact mutual-information arithmetic on tiny enumerable systems.

The chain is source pair (s, x) -> encoder table p(z|x) over hard blocks
z in {-1,+1}^n -> symbol-flip channel with probability q -> decoder tables
q_s(s|zhat), q_o(x|zhat).  Everything is a finite sum, so the weighted
objective I(S;Zhat) + lam * I(X;Zhat) and its two variational lower-bound
forms can be computed to machine precision and compared:

  nested form:  sum over (s,x) and zhat|x of the decoder log-scores, plus
                H(S) + lam * H(X)
  flat form:    the same expression grouped through the channel-output
                marginal p(zhat) and the true posteriors

Both equal the objective minus a nonnegative KL divergence, so their value
never exceeds the objective, with equality exactly when the decoder tables
coincide with the true posteriors.  ``verify_bounds`` checks all of this on
randomized decoder tables; entropies and bounds are in nats throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .autodiff import EPS_LOG
from .encoder import enumerate_symbol_blocks
from .errors import DimensionError, DomainError

_NORM_TOL = 1e-12


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in nats; zero-probability entries contribute nothing."""
    p = np.asarray(p, dtype=np.float64)
    mask = p > 0
    return float(-(p[mask] * np.log(p[mask])).sum())


def channel_matrix(n: int, flip_prob: float) -> np.ndarray:
    """Transition matrix over hard blocks: entry (i, j) is P(out = block_j | in = block_i)."""
    if not 0.0 <= flip_prob <= 0.5:
        raise DomainError(f"flip probability must lie in [0, 0.5], got {flip_prob}")
    blocks = enumerate_symbol_blocks(n)
    hamming = (blocks[:, None, :] != blocks[None, :, :]).sum(axis=2)
    return flip_prob**hamming * (1.0 - flip_prob) ** (n - hamming)


def _check_rows_normalized(name: str, table: np.ndarray) -> None:
    if np.any(table < 0):
        raise DomainError(f"{name} has negative entries")
    if not np.allclose(table.sum(axis=-1), 1.0, atol=_NORM_TOL):
        raise DomainError(f"{name} rows are not normalized within {_NORM_TOL}")


@dataclass(frozen=True)
class TinySystem:
    """A fully enumerable source/encoder/channel/decoder chain.

    p_sx: joint source table, shape (|S|, |X|), sums to 1.
    encoder: p(z|x) rows over the 2^n hard blocks, shape (|X|, 2^n).
    flip_prob: per-symbol flip probability of the channel.
    dec_s: semantic decoder table q_s(s|zhat), shape (2^n, |S|).
    dec_o: observation decoder table q_o(x|zhat), shape (2^n, |X|).
    """

    p_sx: np.ndarray
    encoder: np.ndarray
    flip_prob: float
    dec_s: np.ndarray
    dec_o: np.ndarray

    def __post_init__(self):
        p_sx = np.asarray(self.p_sx, dtype=np.float64)
        if p_sx.ndim != 2:
            raise DimensionError("source table must be 2-D (|S|, |X|)")
        if np.any(p_sx < 0) or abs(p_sx.sum() - 1.0) > _NORM_TOL:
            raise DomainError(f"source table must be a joint distribution within {_NORM_TOL}")
        num_blocks = self.encoder.shape[1]
        n = int(round(np.log2(num_blocks)))
        if 2**n != num_blocks:
            raise DimensionError(f"encoder must cover 2^n blocks, got {num_blocks} columns")
        if not 1 <= n <= 6:
            raise DomainError(f"block length must lie in 1..6, got {n}")
        if p_sx.size > 16:
            raise DomainError(f"source alphabet too large for enumeration: {p_sx.shape}")
        if self.encoder.shape[0] != p_sx.shape[1]:
            raise DimensionError("encoder rows must match the x alphabet")
        _check_rows_normalized("encoder table", self.encoder)
        if self.dec_s.shape != (num_blocks, p_sx.shape[0]):
            raise DimensionError(f"semantic decoder table has shape {self.dec_s.shape}")
        if self.dec_o.shape != (num_blocks, p_sx.shape[1]):
            raise DimensionError(f"observation decoder table has shape {self.dec_o.shape}")
        _check_rows_normalized("semantic decoder table", self.dec_s)
        _check_rows_normalized("observation decoder table", self.dec_o)
        if not 0.0 <= self.flip_prob <= 0.5:
            raise DomainError(f"flip probability must lie in [0, 0.5], got {self.flip_prob}")

    @property
    def n(self) -> int:
        return int(round(np.log2(self.encoder.shape[1])))

    def channel(self) -> np.ndarray:
        return channel_matrix(self.n, self.flip_prob)

    def zhat_given_x(self) -> np.ndarray:
        """p(zhat|x): encoder composed with the flip channel, shape (|X|, 2^n)."""
        return self.encoder @ self.channel()

    def p_s(self) -> np.ndarray:
        return self.p_sx.sum(axis=1)

    def p_x(self) -> np.ndarray:
        return self.p_sx.sum(axis=0)

    def p_zhat(self) -> np.ndarray:
        return self.p_x() @ self.zhat_given_x()

    def joint_with_zhat(self, var: str) -> np.ndarray:
        """Joint table of (var, zhat) for var in {'s', 'x', 'z'}."""
        if var == "s":
            return self.p_sx @ self.zhat_given_x()
        if var == "x":
            return self.p_x()[:, None] * self.zhat_given_x()
        if var == "z":
            p_z = self.p_x() @ self.encoder
            return p_z[:, None] * self.channel()
        raise DomainError(f"unknown variable {var!r}; expected 's', 'x', or 'z'")

    def posteriors(self) -> tuple[np.ndarray, np.ndarray]:
        """True posterior tables p(s|zhat) and p(x|zhat), shape (2^n, |S|/|X|).

        Blocks with zero marginal probability get uniform rows so the
        result is still a valid decoder table.
        """
        out = []
        for var in ("s", "x"):
            joint = self.joint_with_zhat(var)  # (A, B)
            pz = joint.sum(axis=0)
            post = np.full(joint.T.shape, 1.0 / joint.shape[0])
            live = pz > 0
            post[live] = joint[:, live].T / pz[live][:, None]
            out.append(post)
        return out[0], out[1]


def mutual_information(joint: np.ndarray) -> float:
    """MI in nats from a 2-D joint table; zero entries are skipped."""
    joint = np.asarray(joint, dtype=np.float64)
    if abs(joint.sum() - 1.0) > 1e-9:
        raise DomainError("joint table does not sum to 1")
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    mask = joint > 0
    ratio = joint[mask] / (pa[:, None] * pb[None, :])[mask]
    return float((joint[mask] * np.log(ratio)).sum())


def exact_mi(sys: TinySystem, var: str) -> float:
    """I(var; Zhat) in nats by full enumeration; var in {'s', 'x', 'z'}."""
    return mutual_information(sys.joint_with_zhat(var))


def mi_objective(sys: TinySystem, lam: float) -> float:
    """The weighted objective I(S;Zhat) + lam * I(X;Zhat)."""
    return exact_mi(sys, "s") + lam * exact_mi(sys, "x")


@dataclass(frozen=True)
class BoundValue:
    value: float
    clamped: bool  # True when a zero decoder entry met positive posterior mass


def _clamped_log(table: np.ndarray, weight: np.ndarray) -> tuple[np.ndarray, bool]:
    """log(table) floored at EPS_LOG; flags whether flooring met nonzero weight."""
    clamped = bool(np.any((table < EPS_LOG) & (weight > 0)))
    return np.log(np.maximum(table, EPS_LOG)), clamped


def lemma1_rhs(sys: TinySystem, lam: float) -> BoundValue:
    """Lower bound in the channel-marginal form.

    value = -E_{p(zhat)}[ CE(p(s|zhat), q_s) + lam * CE(p(x|zhat), q_o) ]
            + H(S) + lam * H(X)
    """
    pz = sys.p_zhat()
    post_s, post_x = sys.posteriors()
    log_qs, c1 = _clamped_log(sys.dec_s, post_s * pz[:, None])
    log_qo, c2 = _clamped_log(sys.dec_o, post_x * pz[:, None])
    score = (pz[:, None] * post_s * log_qs).sum() + lam * (pz[:, None] * post_x * log_qo).sum()
    value = score + entropy(sys.p_s()) + lam * entropy(sys.p_x())
    return BoundValue(value=float(value), clamped=c1 or c2)


def theorem1_rhs(sys: TinySystem, lam: float) -> BoundValue:
    """The same lower bound in nested-expectation form.

    value = E_{p(s,x)} E_{p(zhat|x)}[ log q_s(s|zhat) + lam * log q_o(x|zhat) ]
            + H(S) + lam * H(X)

    Expanding p(zhat) p(.|zhat) into the joint shows this equals lemma1_rhs
    in exact arithmetic; verify_bounds confirms it numerically per trial.
    """
    zhat_x = sys.zhat_given_x()  # (X, B)
    weight_s = sys.p_sx[:, :, None] * zhat_x[None, :, :]  # (S, X, B)
    log_qs, c1 = _clamped_log(sys.dec_s, weight_s.sum(axis=1).T)
    log_qo, c2 = _clamped_log(sys.dec_o, weight_s.sum(axis=0).T)
    term_s = (weight_s.sum(axis=1) * log_qs.T).sum()
    term_x = (weight_s.sum(axis=0) * log_qo.T).sum()
    value = term_s + lam * term_x + entropy(sys.p_s()) + lam * entropy(sys.p_x())
    return BoundValue(value=float(value), clamped=c1 or c2)


def with_decoders(sys: TinySystem, dec_s: np.ndarray, dec_o: np.ndarray) -> TinySystem:
    return replace(sys, dec_s=dec_s, dec_o=dec_o)


def with_posterior_decoders(sys: TinySystem) -> TinySystem:
    post_s, post_x = sys.posteriors()
    return with_decoders(sys, post_s, post_x)


@dataclass(frozen=True)
class BoundReport:
    trials: int
    min_slack: float       # min over trials of objective - bound; >= 0 is the claim
    max_form_gap: float    # max |nested form - flat form|
    tight_slack: float     # slack with decoders set to the true posteriors
    any_clamped: bool

    @property
    def holds(self) -> bool:
        return self.min_slack >= -1e-9 and self.max_form_gap <= 1e-12


def random_decoder_tables(
    rng: np.random.Generator, num_blocks: int, num_s: int, num_x: int
) -> tuple[np.ndarray, np.ndarray]:
    dec_s = rng.dirichlet(np.ones(num_s), size=num_blocks)
    dec_o = rng.dirichlet(np.ones(num_x), size=num_blocks)
    return dec_s, dec_o


def verify_bounds(sys: TinySystem, lam: float, trials: int, rng: np.random.Generator) -> BoundReport:
    """Check the lower-bound and form-equality claims on randomized decoders."""
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    objective = mi_objective(sys, lam)
    num_blocks = sys.encoder.shape[1]
    num_s, num_x = sys.p_sx.shape
    min_slack = np.inf
    max_gap = 0.0
    any_clamped = False
    for _ in range(trials):
        dec_s, dec_o = random_decoder_tables(rng, num_blocks, num_s, num_x)
        trial = with_decoders(sys, dec_s, dec_o)
        flat = lemma1_rhs(trial, lam)
        nested = theorem1_rhs(trial, lam)
        min_slack = min(min_slack, objective - flat.value)
        max_gap = max(max_gap, abs(nested.value - flat.value))
        any_clamped = any_clamped or flat.clamped or nested.clamped
    tight = objective - lemma1_rhs(with_posterior_decoders(sys), lam).value
    return BoundReport(
        trials=trials,
        min_slack=float(min_slack),
        max_form_gap=float(max_gap),
        tight_slack=float(tight),
        any_clamped=any_clamped,
    )


def random_system(rng: np.random.Generator, max_classes: int = 4, max_n: int = 3) -> TinySystem:
    """Draw a random enumerable system: alphabet sizes 2..max_classes, n up to max_n."""
    num_s = int(rng.integers(2, max_classes + 1))
    num_x = int(rng.integers(2, max_classes + 1))
    n = int(rng.integers(1, max_n + 1))
    num_blocks = 2**n
    p_sx = rng.dirichlet(np.ones(num_s * num_x)).reshape(num_s, num_x)
    encoder = rng.dirichlet(np.ones(num_blocks), size=num_x)
    dec_s, dec_o = random_decoder_tables(rng, num_blocks, num_s, num_x)
    flip = float(rng.uniform(0.0, 0.5))
    return TinySystem(p_sx=p_sx, encoder=encoder, flip_prob=flip, dec_s=dec_s, dec_o=dec_o)
