"""Seeded slot-level Monte Carlo for the layered scheme and its baselines.

Slots are independent: every packet re-picks its channel (and, for the
layered scheme, its power level) fresh each slot.  The simulator therefore
draws whole blocks of slots at once with numpy and scores them vectorized;
the scalar per-channel decoders are kept alongside as the readable reference
the vector paths are tested against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .analytic import SystemConfig

_CHUNK_SLOTS = 32768


class Scheme(enum.Enum):
    """Which access scheme a run scores."""

    NOMA_RA = "noma"
    MS_ALOHA = "msaloha"
    MS_ALOHA_CAPTURE = "capture"


class CaptureSemantics(enum.Enum):
    """How the capture baseline treats a lone packet on the weakest level.

    PHYSICAL: any channel holding exactly one packet succeeds, wherever the
    packet sits.  FORMULA: a lone packet on the weakest level is dropped,
    matching the closed-form series, whose winner sum stops one level short
    of the bottom.
    """

    PHYSICAL = "physical"
    FORMULA = "formula"


@dataclass(frozen=True)
class ChannelOutcome:
    """Decode result for one channel in one slot.

    ``collision_level`` is the 1-based strongest-first index of the level
    where decoding stopped, or None when it never did.
    """

    successes: int
    idle_flag: bool
    collision_level: int | None


@dataclass(frozen=True)
class SlotOutcome:
    per_channel: tuple[ChannelOutcome, ...]
    total_successes: int
    total_attempts: int


@dataclass(frozen=True)
class BernoulliUsers:
    """``users`` stations, each transmitting with probability ``p_access``."""

    users: int
    p_access: float = 1.0

    def __post_init__(self) -> None:
        if self.users < 0:
            raise ValueError(f"users must be >= 0, got {self.users}")
        if not 0.0 <= self.p_access <= 1.0:
            raise ValueError(f"p_access must lie in [0, 1], got {self.p_access}")


@dataclass(frozen=True)
class PoissonPerLevel:
    """Independent Poisson(``rate``) packet count on every (channel, level) cell."""

    rate: float

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise ValueError(f"rate must be >= 0, got {self.rate}")


ArrivalModel = BernoulliUsers | PoissonPerLevel


@dataclass(frozen=True)
class SimStats:
    slots: int
    mean_normalized_throughput: float
    idle_channel_frequency: float
    std_error: float
    total_successes: int
    total_attempts: int


def decode_channel_sic(level_counts: list[int] | tuple[int, ...]) -> ChannelOutcome:
    """Score one channel, strongest level first.

    A count of one decodes and is cancelled, a zero is skipped, and two or
    more stops the channel.  The idle flag marks an empty level seen
    strictly before the stop, or anywhere when decoding runs to the end;
    a channel with no packets at all is idle.
    """
    successes = 0
    idle_seen = False
    for idx, c in enumerate(level_counts):
        if c >= 2:
            return ChannelOutcome(
                successes=successes,
                idle_flag=idle_seen,
                collision_level=idx + 1,
            )
        if c == 1:
            successes += 1
        else:
            idle_seen = True
    return ChannelOutcome(successes=successes, idle_flag=idle_seen, collision_level=None)


def decode_channel_capture(
    level_counts: list[int] | tuple[int, ...],
    semantics: CaptureSemantics = CaptureSemantics.PHYSICAL,
) -> ChannelOutcome:
    """Score one channel with single-winner capture.

    The packet wins when it is alone on the strongest occupied level.  Under
    FORMULA semantics a lone packet sitting on the weakest level loses.
    """
    total = sum(level_counts)
    if total == 0:
        return ChannelOutcome(successes=0, idle_flag=True, collision_level=None)
    occupied_at = next(i for i, c in enumerate(level_counts) if c > 0)
    won = level_counts[occupied_at] == 1
    if (
        won
        and semantics is CaptureSemantics.FORMULA
        and total == 1
        and occupied_at == len(level_counts) - 1
    ):
        won = False
    return ChannelOutcome(
        successes=1 if won else 0,
        idle_flag=False,
        collision_level=None if won else occupied_at + 1,
    )


def _decode_sic_block(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized decode of a (slots, channels, levels) count array.

    Returns (successes, idle_flags, collision_levels) per channel, with
    collision level 0 meaning decoding never stopped.
    """
    slots, channels, levels = counts.shape
    colliding = counts >= 2
    # argmax gives the first colliding level, but also 0 when none collide
    first = np.argmax(colliding, axis=2)
    any_coll = colliding.any(axis=2)
    first = np.where(any_coll, first, levels)
    level_idx = np.arange(levels)
    before_stop = level_idx[None, None, :] < first[:, :, None]
    successes = ((counts == 1) & before_stop).sum(axis=2)
    idle = ((counts == 0) & before_stop).any(axis=2)
    collision_levels = np.where(any_coll, first + 1, 0)
    return successes, idle, collision_levels


def _decode_capture_block(
    counts: np.ndarray, semantics: CaptureSemantics
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized capture decode of a (slots, channels, levels) count array."""
    slots, channels, levels = counts.shape
    occupied = counts > 0
    first = np.argmax(occupied, axis=2)
    totals = counts.sum(axis=2)
    top_count = np.take_along_axis(counts, first[:, :, None], axis=2)[:, :, 0]
    won = (totals > 0) & (top_count == 1)
    if semantics is CaptureSemantics.FORMULA:
        won &= ~((totals == 1) & (first == levels - 1))
    successes = won.astype(np.int64)
    idle = totals == 0
    collision_levels = np.where((totals > 0) & ~won, first + 1, 0)
    return successes, idle, collision_levels


def _decode_single_block(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Plain slotted decode: a channel delivers iff it holds exactly one packet."""
    totals = counts.sum(axis=2)
    successes = (totals == 1).astype(np.int64)
    idle = totals == 0
    collision_levels = np.where(totals >= 2, 1, 0)
    return successes, idle, collision_levels


def _draw_block(
    cfg: SystemConfig,
    arrivals: ArrivalModel,
    scheme: Scheme,
    slots: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw per-(slot, channel, level) packet counts for a block of slots."""
    levels = 1 if scheme is Scheme.MS_ALOHA else cfg.n_levels
    if isinstance(arrivals, PoissonPerLevel):
        return rng.poisson(
            arrivals.rate, size=(slots, cfg.n_channels, levels)
        ).astype(np.int64)
    cells = cfg.n_channels * levels
    probs = np.full(cells, 1.0 / cells)
    if arrivals.p_access == 1.0:
        # constant active count, one vectorized draw for the whole block
        flat = rng.multinomial(arrivals.users, probs, size=slots)
        return flat.reshape(slots, cfg.n_channels, levels)
    active = rng.binomial(arrivals.users, arrivals.p_access, size=slots)
    flat = np.empty((slots, cells), dtype=np.int64)
    for j, a in enumerate(active):
        flat[j] = rng.multinomial(a, probs)
    return flat.reshape(slots, cfg.n_channels, levels)


def _score_block(
    counts: np.ndarray, scheme: Scheme, semantics: CaptureSemantics
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if scheme is Scheme.NOMA_RA:
        return _decode_sic_block(counts)
    if scheme is Scheme.MS_ALOHA_CAPTURE:
        return _decode_capture_block(counts, semantics)
    return _decode_single_block(counts)


def run_slot(
    cfg: SystemConfig,
    arrivals: ArrivalModel,
    scheme: Scheme,
    rng: np.random.Generator,
    capture_semantics: CaptureSemantics = CaptureSemantics.PHYSICAL,
) -> SlotOutcome:
    """Draw and score one slot with the scalar decoders."""
    counts = _draw_block(cfg, arrivals, scheme, 1, rng)[0]
    outcomes = []
    for ch in range(cfg.n_channels):
        row = counts[ch].tolist()
        if scheme is Scheme.NOMA_RA:
            outcomes.append(decode_channel_sic(row))
        elif scheme is Scheme.MS_ALOHA_CAPTURE:
            outcomes.append(decode_channel_capture(row, capture_semantics))
        else:
            total = int(sum(row))
            outcomes.append(
                ChannelOutcome(
                    successes=1 if total == 1 else 0,
                    idle_flag=total == 0,
                    collision_level=1 if total >= 2 else None,
                )
            )
    return SlotOutcome(
        per_channel=tuple(outcomes),
        total_successes=sum(o.successes for o in outcomes),
        total_attempts=int(counts.sum()),
    )


@dataclass
class _TraceSink:
    rows: list[tuple[int, int, int, bool, int]] = field(default_factory=list)

    def extend(
        self,
        slot_base: int,
        successes: np.ndarray,
        idle: np.ndarray,
        collision_levels: np.ndarray,
    ) -> None:
        slots, channels = successes.shape
        for t in range(slots):
            for ch in range(channels):
                self.rows.append(
                    (
                        slot_base + t,
                        ch,
                        int(successes[t, ch]),
                        bool(idle[t, ch]),
                        int(collision_levels[t, ch]),
                    )
                )


def run_fixed_load(
    cfg: SystemConfig,
    arrivals: ArrivalModel,
    scheme: Scheme,
    slots: int,
    seed: int,
    capture_semantics: CaptureSemantics = CaptureSemantics.PHYSICAL,
    trace: _TraceSink | None = None,
) -> SimStats:
    """Simulate ``slots`` independent slots and aggregate.

    The mean normalized throughput is total successes over (channels x
    slots), computed exactly from integer totals.  The standard error is the
    sample standard deviation of per-slot normalized throughput over
    sqrt(slots), zero for runs shorter than two slots.
    """
    if slots < 1:
        raise ValueError(f"slots must be >= 1, got {slots}")
    rng = np.random.default_rng(seed)
    succ_total = 0
    attempts_total = 0
    idle_total = 0
    sum_x2 = 0.0
    done = 0
    while done < slots:
        block = min(_CHUNK_SLOTS, slots - done)
        counts = _draw_block(cfg, arrivals, scheme, block, rng)
        successes, idle, collision_levels = _score_block(
            counts, scheme, capture_semantics
        )
        if trace is not None:
            trace.extend(done, successes, idle, collision_levels)
        per_slot = successes.sum(axis=1)
        succ_total += int(per_slot.sum())
        attempts_total += int(counts.sum())
        idle_total += int(idle.sum())
        x = per_slot / cfg.n_channels
        sum_x2 += float(x @ x)
        done += block
    mean = succ_total / (cfg.n_channels * slots)
    if slots >= 2:
        var = max((sum_x2 - slots * mean * mean) / (slots - 1), 0.0)
        std_error = (var / slots) ** 0.5
    else:
        std_error = 0.0
    return SimStats(
        slots=slots,
        mean_normalized_throughput=mean,
        idle_channel_frequency=idle_total / (cfg.n_channels * slots),
        std_error=std_error,
        total_successes=succ_total,
        total_attempts=attempts_total,
    )


def run_fixed_active(
    cfg: SystemConfig,
    active_users: int,
    slots: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Layered-scheme run with exactly ``active_users`` packets every slot.

    Used by the barring controller, which fixes the admitted population for
    a whole period and re-draws channel and level choices each slot.  The
    caller owns the generator so periods share one stream.

    Returns (mean normalized throughput, idle-channel frequency).
    """
    if slots < 1:
        raise ValueError(f"slots must be >= 1, got {slots}")
    if active_users < 0:
        raise ValueError(f"active_users must be >= 0, got {active_users}")
    cells = cfg.n_channels * cfg.n_levels
    probs = np.full(cells, 1.0 / cells)
    counts = rng.multinomial(active_users, probs, size=slots).reshape(
        slots, cfg.n_channels, cfg.n_levels
    )
    successes, idle, _ = _decode_sic_block(counts)
    t_norm = int(successes.sum()) / (cfg.n_channels * slots)
    idle_freq = int(idle.sum()) / (cfg.n_channels * slots)
    return t_norm, idle_freq
