"""Optimal offered load, throughput tables and load inversion.

The Poisson throughput curve is smooth and unimodal in the per-level rate,
so its maximizer is found by bisecting the sign change of the analytic
derivative.  The finite-population table (throughput versus user count) is
what the barring controller inverts: an observed throughput maps back to a
light-load and a heavy-load user estimate on either side of the peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .analytic import SystemConfig, idle_channel_prob, throughput_binomial, throughput_poisson

BISECTION_BRACKET: tuple[float, float] = (1e-6, 10.0)


def throughput_derivative(lam: float, cfg: SystemConfig) -> float:
    """d/d(lam) of the Poisson throughput at per-level rate ``lam`` > 0.

    The limit at lam -> 0+ is ``n_channels * n_levels``; it is reported by
    callers that need it rather than folded in here, so lam <= 0 is
    rejected outright.
    """
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    decay = math.exp(-2.0 * lam)
    q0 = math.exp(-lam)
    clean = q0 + lam * q0
    total = 0.0
    for i in range(1, cfg.n_levels + 1):
        total += (decay - i * lam * lam * decay) * clean ** (i - 2)
    return cfg.n_channels * total


@dataclass(frozen=True)
class OptimalPoint:
    """Root of the throughput derivative and the quantities read off it.

    ``lambda_star`` is the per-level rate, ``channel_load_star`` the rate
    times the level count, ``max_throughput`` the system throughput at the
    root and ``idle_threshold`` the idle-channel probability there, which
    the barring controller uses to pick a side of the peak.
    """

    cfg: SystemConfig
    lambda_star: float
    channel_load_star: float
    max_throughput: float
    idle_threshold: float

    @property
    def max_normalized_throughput(self) -> float:
        return self.max_throughput / self.cfg.n_channels


def optimal_lambda(cfg: SystemConfig, tol: float = 1e-9) -> OptimalPoint:
    """Bisect the derivative over the fixed bracket to the optimal rate.

    Raises RuntimeError when the derivative does not change sign over the
    bracket, and AssertionError when the computed root fails the local
    maximum probe T(root) >= T(root +- 10 * tol).
    """
    lo, hi = BISECTION_BRACKET
    f_lo = throughput_derivative(lo, cfg)
    f_hi = throughput_derivative(hi, cfg)
    if not (f_lo > 0.0 > f_hi):
        raise RuntimeError(
            f"derivative does not bracket a maximum over {BISECTION_BRACKET}: "
            f"f(lo)={f_lo!r}, f(hi)={f_hi!r}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if throughput_derivative(mid, cfg) > 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    t_star = throughput_poisson(root, cfg)
    for probe in (root - 10.0 * tol, root + 10.0 * tol):
        if probe > 0.0:
            assert throughput_poisson(probe, cfg) <= t_star * (1.0 + 1e-12), (
                f"root certificate failed at {probe!r}"
            )
    return OptimalPoint(
        cfg=cfg,
        lambda_star=root,
        channel_load_star=root * cfg.n_levels,
        max_throughput=t_star,
        idle_threshold=idle_channel_prob(root, cfg.n_levels),
    )


def max_gain_ratio(l: int) -> float:
    """Peak throughput with ``l`` levels relative to the single-level peak.

    The single-level Poisson peak is 1/e per channel, so the ratio is the
    l-level per-channel maximum times e.  Channel count cancels; it is
    evaluated at one channel.
    """
    point = optimal_lambda(SystemConfig(n_channels=1, n_levels=l))
    return point.max_throughput * math.e


@dataclass(frozen=True)
class ThroughputMatrix:
    """Finite-population throughput table t(u) for u = 0..u_max."""

    cfg: SystemConfig
    values: tuple[tuple[int, float], ...]
    peak_index: int

    @property
    def peak_users(self) -> int:
        return self.values[self.peak_index][0]

    @property
    def peak_throughput(self) -> float:
        return self.values[self.peak_index][1]

    def write_csv(self, path: Path) -> None:
        lines = ["u,t"]
        lines.extend(f"{u},{t!r}" for u, t in self.values)
        path.write_text("\n".join(lines) + "\n")


def build_throughput_matrix(cfg: SystemConfig, u_max: int = 500) -> ThroughputMatrix:
    """Tabulate t(u) for u = 0..u_max and locate the peak.

    The table must rise to the peak and fall after it; a violation beyond
    1e-12 slack means the closed form went numerically bad, which is worth
    failing loudly over rather than inverting garbage.
    """
    if u_max < 1:
        raise ValueError(f"u_max must be >= 1, got {u_max}")
    values = tuple(
        (u, throughput_binomial(u, cfg)) for u in range(u_max + 1)
    )
    peak_index = max(range(len(values)), key=lambda j: values[j][1])
    for j in range(1, len(values)):
        prev_t, cur_t = values[j - 1][1], values[j][1]
        if j <= peak_index:
            assert cur_t >= prev_t - 1e-12, (
                f"table not rising at u={values[j][0]}: {prev_t!r} -> {cur_t!r}"
            )
        else:
            assert cur_t <= prev_t + 1e-12, (
                f"table not falling at u={values[j][0]}: {prev_t!r} -> {cur_t!r}"
            )
    return ThroughputMatrix(cfg=cfg, values=values, peak_index=peak_index)


@dataclass(frozen=True)
class LoadEstimatePair:
    """User-count estimates on the light and heavy side of the peak."""

    u_light: int
    u_heavy: int


def invert_throughput(matrix: ThroughputMatrix, t_obs: float) -> LoadEstimatePair:
    """Map an observed system throughput back to nearest table entries.

    The observation is normalized per channel; the table holds system
    throughput, so the target is scaled up before matching.  One nearest
    neighbour is taken on each side of the peak, ties resolving toward the
    peak.  An observation at or above the peak collapses both estimates to
    the peak user count.
    """
    if t_obs < 0:
        raise ValueError(f"t_obs must be >= 0, got {t_obs}")
    target = t_obs * matrix.cfg.n_channels
    peak = matrix.peak_index
    if target >= matrix.peak_throughput:
        u_peak = matrix.peak_users
        return LoadEstimatePair(u_light=u_peak, u_heavy=u_peak)
    best_j = 0
    best_d = abs(matrix.values[0][1] - target)
    for j in range(1, peak + 1):
        d = abs(matrix.values[j][1] - target)
        if d <= best_d:
            best_j, best_d = j, d
    u_light = matrix.values[best_j][0]
    best_j = peak
    best_d = abs(matrix.values[peak][1] - target)
    for j in range(peak + 1, len(matrix.values)):
        d = abs(matrix.values[j][1] - target)
        if d < best_d:
            best_j, best_d = j, d
    u_heavy = matrix.values[best_j][0]
    return LoadEstimatePair(u_light=u_light, u_heavy=u_heavy)
