"""
Monte Carlo run of the measure / sift / distill protocol.

Alice and Bob measure position quadratures of many copies of a symmetric
state.  Alice keeps outcomes with ``| |x_a| - x0 | <= w`` and announces
``|x_a|``; Bob keeps the pair when ``|x_b| - |x_a|`` falls in the accepted
interval (scaled by ``|x_a|``).  Signs become bits and advantage distillation
runs on blocks of ``N`` sifted bits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import expit

from .qkd_analysis import StdSymmetricState, accept_interval, error_rate, xx_marginal
from .sampling import binomial_se, sample_xx


@dataclass(frozen=True)
class SiftingWindow:
    """Alice's bin ``x0_target +- half_width`` and Bob's interval in units of ``|x_a|``.

    ``half_width=inf`` disables Alice's binning.
    """

    x0_target: float
    half_width: float
    delta_interval: tuple[float, float]

    def __post_init__(self):
        if not (self.x0_target > 0 and self.half_width > 0):
            raise ValueError("x0_target and half_width must be positive")
        if math.isfinite(self.half_width) and self.x0_target - self.half_width <= 0:
            raise ValueError("window must satisfy x0_target - half_width > 0")
        lo, hi = self.delta_interval
        if not lo <= hi:
            raise ValueError("delta interval must have lo <= hi")
        object.__setattr__(self, "delta_interval", (float(lo), float(hi)))

    @classmethod
    def for_state(
        cls, s: StdSymmetricState, x0_target: float, half_width: float, attack: str = "individual"
    ) -> "SiftingWindow":
        return cls(x0_target, half_width, accept_interval(s, 1.0, attack).interval_unit)

    @property
    def alice_range(self) -> tuple[float, float]:
        if not math.isfinite(self.half_width):
            return 0.0, math.inf
        return self.x0_target - self.half_width, self.x0_target + self.half_width

    def as_dict(self) -> dict:
        return {
            "x0_target": self.x0_target,
            "half_width": self.half_width,
            "delta_lo": self.delta_interval[0],
            "delta_hi": self.delta_interval[1],
        }


@dataclass(frozen=True)
class ProtocolRun:
    n_emitted: int
    n_sifted: int
    bits_a: np.ndarray
    bits_b: np.ndarray
    empirical_error: float
    seed: int | None = None

    @classmethod
    def from_bits(cls, bits_a, bits_b, n_emitted: int | None = None, seed: int | None = None) -> "ProtocolRun":
        a = np.asarray(bits_a, dtype=np.uint8)
        b = np.asarray(bits_b, dtype=np.uint8)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("bit strings must be 1-d and of equal length")
        a.setflags(write=False)
        b.setflags(write=False)
        n = a.size
        err = float(np.count_nonzero(a != b)) / n if n else math.nan
        return cls(n if n_emitted is None else n_emitted, n, a, b, err, seed)

    @property
    def error_se(self) -> float:
        return binomial_se(self.empirical_error, self.n_sifted)


@dataclass(frozen=True)
class AdResult:
    block_size: int
    n_blocks: int
    n_blocks_accepted: int
    post_error: float
    bound: float
    seed: int | None = None

    @property
    def standard_error(self) -> float:
        return binomial_se(self.post_error, self.n_blocks_accepted)


def sample_quadratures(s: StdSymmetricState, n: int, seed: int) -> np.ndarray:
    """``n`` position-outcome pairs ``(x_a, x_b)``, shape ``(n, 2)``."""
    return sample_xx(s.lam, s.cx, n, seed)


def sign_bits(x: np.ndarray) -> np.ndarray:
    # x == 0 maps to bit 0
    return (np.asarray(x) < 0).astype(np.uint8)


def sift(pairs: np.ndarray, window: SiftingWindow, seed: int | None = None) -> ProtocolRun:
    pairs = np.asarray(pairs, dtype=float)
    axa, axb = np.abs(pairs[:, 0]), np.abs(pairs[:, 1])
    a_lo, a_hi = window.alice_range
    lo, hi = window.delta_interval
    diff = axb - axa
    keep = (axa >= a_lo) & (axa <= a_hi) & (diff >= lo * axa) & (diff <= hi * axa)
    kept = pairs[keep]
    return ProtocolRun.from_bits(
        sign_bits(kept[:, 0]), sign_bits(kept[:, 1]), n_emitted=len(pairs), seed=seed
    )


def ad_error_formula(epsilon: float, n: int) -> tuple[float, float]:
    """Error after advantage distillation on blocks of ``n`` bits, and its geometric bound."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if n < 1:
        raise ValueError("block size must be >= 1")
    # eps^n / ((1 - eps)^n + eps^n) == r / (1 + r) with r = odds^n
    log_r = n * math.log(epsilon / (1 - epsilon))
    bound = math.exp(log_r) if log_r < 700 else math.inf
    exact = bound / (1 + bound) if log_r <= 0 else float(expit(log_r))
    return exact, bound


def advantage_distillation(run: ProtocolRun, block_size: int, seed: int) -> AdResult:
    """Repetition-code advantage distillation over consecutive blocks of sifted bits.

    Alice publishes ``a_i xor b`` for a random bit ``b``; Bob accepts a block
    when ``bob_i xor a_i xor b`` is the same for every ``i`` and decodes that
    value as ``b'``.
    """
    if block_size < 1:
        raise ValueError("block size must be >= 1")
    if run.n_sifted < block_size:
        raise ValueError("fewer sifted bits than one block")
    nb = run.n_sifted // block_size
    a = run.bits_a[: nb * block_size].reshape(nb, block_size)
    b = run.bits_b[: nb * block_size].reshape(nb, block_size)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    secret = rng.integers(0, 2, size=nb, dtype=np.uint8)
    public = a ^ secret[:, None]
    guess = b ^ public
    accepted = np.all(guess == guess[:, :1], axis=1)
    n_acc = int(np.count_nonzero(accepted))
    wrong = int(np.count_nonzero(guess[accepted, 0] != secret[accepted]))
    eps = run.empirical_error
    bound = (eps / (1 - eps)) ** block_size if eps < 1 else math.inf
    return AdResult(
        block_size=block_size,
        n_blocks=nb,
        n_blocks_accepted=n_acc,
        post_error=wrong / n_acc if n_acc else math.nan,
        bound=bound,
        seed=seed,
    )


def _window_integrals(s: StdSymmetricState, window: SiftingWindow, rtol: float = 1e-8):
    a_lo, a_hi = window.alice_range
    if not math.isfinite(a_hi):
        a_hi = 8 * math.sqrt(s.lam / 2)
    lo, hi = window.delta_interval
    top = 8 * math.sqrt(s.lam / 2) + a_hi

    def bounds(xa):
        return xa * (1 + lo), min(xa * (1 + hi), top)

    def both(xb, xa):
        return xx_marginal(s, xa, xb) + xx_marginal(s, xa, -xb)

    def wrong(xb, xa):
        return error_rate(s, xa, xb) * both(xb, xa)

    opts = dict(epsabs=0.0, epsrel=rtol)
    mass = integrate.dblquad(both, a_lo, a_hi, lambda x: bounds(x)[0], lambda x: bounds(x)[1], **opts)[0]
    err = integrate.dblquad(wrong, a_lo, a_hi, lambda x: bounds(x)[0], lambda x: bounds(x)[1], **opts)[0]
    return mass, err


def window_error_prediction(s: StdSymmetricState, window: SiftingWindow) -> float:
    """Mismatch rate expected among sifted pairs: the window average of ``eps`` under the marginal."""
    mass, err = _window_integrals(s, window)
    return err / mass


def window_acceptance_prediction(s: StdSymmetricState, window: SiftingWindow) -> float:
    """Probability that an emitted pair survives sifting (all four sign quadrants)."""
    return 2 * _window_integrals(s, window)[0]


def simulate(
    s: StdSymmetricState,
    window: SiftingWindow,
    n: int,
    block_size: int,
    seed: int,
) -> dict:
    """One protocol run, returned as a transcript record."""
    seeds = np.random.SeedSequence(seed).generate_state(2)
    run = sift(sample_quadratures(s, n, int(seeds[0])), window, seed=seed)
    record = {
        "type": "run",
        "lambda": s.lam,
        "cx": s.cx,
        "cp": s.cp,
        **window.as_dict(),
        "seed": seed,
        "n_emitted": run.n_emitted,
        "n_sifted": run.n_sifted,
        "n_errors": int(np.count_nonzero(run.bits_a != run.bits_b)),
        "empirical_error": _nan_none(run.empirical_error),
        "empirical_error_se": _nan_none(run.error_se),
        "block_size": block_size,
        "post_error": None,
        "bound": None,
        "n_blocks": 0,
        "n_blocks_accepted": 0,
    }
    if run.n_sifted >= block_size:
        ad = advantage_distillation(run, block_size, int(seeds[1]))
        record.update(
            post_error=_nan_none(ad.post_error),
            bound=_nan_none(ad.bound),
            n_blocks=ad.n_blocks,
            n_blocks_accepted=ad.n_blocks_accepted,
        )
    return record


def _nan_none(x):
    return None if x is None or not math.isfinite(x) else x


def to_jsonl(records) -> str:
    return "".join(json.dumps(r, sort_keys=True, allow_nan=False) + "\n" for r in records)
