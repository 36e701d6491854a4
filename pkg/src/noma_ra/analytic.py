"""Closed-form throughput and idle-channel probabilities.

The layered scheme: every packet in a slot picks one of ``n_channels``
channels and one of ``n_levels`` received-power levels uniformly at random.
On each channel the receiver decodes levels strongest first.  A level with
exactly one packet decodes and is cancelled; an empty level is skipped; a
level with two or more packets is a power collision that stops decoding on
the channel, so that level and every weaker one are lost.

Two single-level baselines are included for comparison: plain multichannel
slotted ALOHA (a channel succeeds only when it holds exactly one packet) and
its capture variant (the single strongest packet on a channel survives a
collision).

Throughout, ``0 ** 0 == 1``, which is what Python's float power returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cache


@dataclass(frozen=True)
class SystemConfig:
    """Static system description: channel count and power-level count."""

    n_channels: int
    n_levels: int

    def __post_init__(self) -> None:
        if self.n_channels < 1:
            raise ValueError(f"n_channels must be >= 1, got {self.n_channels}")
        if self.n_levels < 1:
            raise ValueError(f"n_levels must be >= 1, got {self.n_levels}")


@dataclass(frozen=True)
class PowerLevelSet:
    """Received-power targets, strongest first."""

    target_sinr: float
    levels: tuple[float, ...]


def power_levels(gamma: float, l: int) -> PowerLevelSet:
    """Received-power targets ``gamma * (gamma + 1) ** (l - k)`` for k = 1..l.

    With these targets a packet on level k sees SINR exactly ``gamma`` once
    all stronger levels are cancelled, treating every weaker level as
    interference.  That is what makes strongest-first peeling work.

    Args:
        gamma: per-packet SINR target, > 0.
        l: number of levels, >= 1.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    levels = tuple(gamma * (gamma + 1.0) ** (l - k) for k in range(1, l + 1))
    return PowerLevelSet(target_sinr=gamma, levels=levels)


def cond_success_prob(u_i: int, s_i: int, l: int) -> float:
    """P(exactly ``s_i`` packets decode | ``u_i`` packets on an l-level channel).

    Levels are chosen uniformly.  Success of exactly ``s_i`` packets requires
    ``s_i`` singly occupied levels, possibly interleaved with idle levels,
    sitting above the first power collision (or no collision at all when
    every packet is alone on its own level).

    Args:
        u_i: packets on the channel, >= 1.
        s_i: successful packets, 0 <= s_i <= u_i.
        l: power levels, >= 1.

    Returns:
        The conditional probability.  No clamping is applied, so tests can
        compare the raw floating value against enumeration.
    """
    if u_i < 1:
        raise ValueError(f"u_i must be >= 1, got {u_i}")
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    if not 0 <= s_i <= u_i:
        raise ValueError(f"s_i must lie in [0, u_i], got {s_i}")
    if s_i < min(l, u_i):
        # Condition on the first collision at level s_i + g + 1, i.e. with g
        # idle levels mixed among the s_i successes above it.  Powers are
        # taken of level-count ratios so large u_i cannot overflow.
        m = u_i - s_i
        total = 0.0
        for g in range(l - s_i):
            placements = math.perm(u_i, s_i) * math.comb(s_i + g, s_i) / l**s_i
            r_at = (l - s_i - g) / l
            r_below = (l - s_i - g - 1) / l
            total += placements * (
                r_at**m - r_below**m - m * r_below ** (m - 1) / l
            )
        return total
    if s_i == u_i <= l:
        # every packet alone on a level of its own
        prob = 1.0
        for j in range(u_i):
            prob *= (l - j) / l
        return prob
    return 0.0


@cache
def cond_throughput(u_i: int, l: int) -> float:
    """E[decoded packets | ``u_i`` packets on an l-level channel]."""
    return sum(
        s * cond_success_prob(u_i, s, l) for s in range(1, min(l, u_i) + 1)
    )


def _binom_channel_pmf(u: int, n: int) -> list[float]:
    """pmf of Binomial(u, 1/n) for k = 0..u.

    Uses the multiplicative recurrence in linear space; beyond ~1000 trials
    the starting term (1 - 1/n)**u can underflow, so switch to log-gamma.
    """
    if n == 1:
        pmf = [0.0] * (u + 1)
        pmf[u] = 1.0
        return pmf
    if u > 1000:
        log_n = math.log(n)
        log_q = math.log(n - 1) - log_n
        lg_u = math.lgamma(u + 1)
        return [
            math.exp(
                lg_u
                - math.lgamma(k + 1)
                - math.lgamma(u - k + 1)
                - k * log_n
                + (u - k) * log_q
            )
            for k in range(u + 1)
        ]
    pmf = [0.0] * (u + 1)
    pmf[0] = ((n - 1) / n) ** u
    for k in range(u):
        pmf[k + 1] = pmf[k] * (u - k) / ((k + 1) * (n - 1))
    return pmf


def throughput_binomial(u: int, cfg: SystemConfig) -> float:
    """Expected successes per slot with ``u`` packets spread over the system.

    Each packet picks a channel uniformly, so one channel sees a
    Binomial(u, 1/n_channels) packet count; the per-channel conditional
    expectation is mixed over that law and scaled by the channel count.
    """
    if u < 0:
        raise ValueError(f"u must be >= 0, got {u}")
    if u == 0:
        return 0.0
    pmf = _binom_channel_pmf(u, cfg.n_channels)
    per_channel = sum(
        cond_throughput(k, cfg.n_levels) * pmf[k] for k in range(1, u + 1)
    )
    return cfg.n_channels * per_channel


def throughput_poisson(lam: float, cfg: SystemConfig) -> float:
    """Expected successes per slot under per-level Poisson(``lam``) arrivals.

    ``lam`` is the rate per power level, so the offered load per channel is
    ``lam * n_levels``.  Level i decodes exactly when it holds one packet and
    every stronger level holds at most one, which gives a closed geometric
    sum per channel.
    """
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    q0 = math.exp(-lam)
    q1 = lam * q0
    clean = q0 + q1
    per_channel = sum(
        q1 * clean ** (i - 1) for i in range(1, cfg.n_levels + 1)
    )
    return cfg.n_channels * per_channel


def msaloha_throughput_binomial(u: int, n: int) -> float:
    """Single-level baseline, finite population: ``u * (1 - 1/n) ** (u - 1)``."""
    if u < 0:
        raise ValueError(f"u must be >= 0, got {u}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if u == 0:
        return 0.0
    return u * (1.0 - 1.0 / n) ** (u - 1)


def msaloha_throughput_poisson(lam: float, n: int) -> float:
    """Single-level baseline, Poisson(``lam``) packets per channel: ``n * lam * e**-lam``."""
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    # grouped so a single-level layered channel reproduces this bit for bit
    return n * (lam * math.exp(-lam))


def _capture_success_weight(u_i: int, l: int) -> float:
    """P(a unique strongest packet is captured | ``u_i`` packets), as summed.

    Sums over the winner's level j = 1..l-1 with the other ``u_i - 1``
    packets strictly below.  The weakest level is excluded from the sum, so
    a lone packet sitting there is not counted: for ``u_i == 1`` this yields
    (l - 1) / l rather than 1.  The simulator offers both readings.
    """
    total = 0.0
    for g in range(l - 1):
        total += ((l - g - 1) / l) ** (u_i - 1)
    return u_i * total / l


def capture_throughput_binomial(u: int, cfg: SystemConfig) -> float:
    """Capture baseline, finite population of ``u`` packets over the system."""
    if u < 0:
        raise ValueError(f"u must be >= 0, got {u}")
    if u == 0:
        return 0.0
    pmf = _binom_channel_pmf(u, cfg.n_channels)
    per_channel = sum(
        _capture_success_weight(k, cfg.n_levels) * pmf[k] for k in range(1, u + 1)
    )
    return cfg.n_channels * per_channel


def capture_throughput_poisson(
    lam: float, cfg: SystemConfig, tail_tol: float = 1e-12
) -> float:
    """Capture baseline under Poisson(``lam``) packets per channel.

    The series over the per-channel packet count has no closed form here, so
    it is summed until the additive term drops below ``tail_tol`` with the
    count already past the bulk of the Poisson mass (lam + 10 * sqrt(lam + 1)).
    """
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if tail_tol <= 0:
        raise ValueError(f"tail_tol must be > 0, got {tail_tol}")
    if lam == 0:
        return 0.0
    past_bulk = lam + 10.0 * math.sqrt(lam + 1.0)
    total = 0.0
    pmf = math.exp(-lam)
    k = 0
    while True:
        k += 1
        pmf *= lam / k
        term = _capture_success_weight(k, cfg.n_levels) * pmf
        total += term
        if term < tail_tol and k > past_bulk:
            return cfg.n_channels * total


def idle_channel_prob(lam: float, l: int) -> float:
    """P(a channel shows an unused level before decoding stops).

    A channel counts as idle when an empty level is seen strictly before the
    first power collision, or anywhere on the channel when no collision
    occurs.  Zero arrivals therefore make the channel idle with probability
    one.  Per-level arrivals are Poisson(``lam``).
    """
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    q0 = math.exp(-lam)
    q1 = lam * q0
    clean = q0 + q1
    # no collision anywhere, minus the all-singles case with nothing idle
    no_collision = clean**l - q1**l
    # first collision at level i >= 2 with at least one idle level above it
    stopped = (1.0 - clean) * sum(
        clean ** (i - 1) - q1 ** (i - 1) for i in range(2, l + 1)
    )
    return no_collision + stopped
