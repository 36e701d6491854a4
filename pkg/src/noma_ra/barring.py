"""Adaptive user barring driven by throughput observations.

The controller cannot see how many stations want in; it only sees the
throughput and idle-channel frequency of the last observation period.
Because the throughput curve is unimodal in the user count, one observed
throughput maps to two candidate populations, one on each side of the peak.
The idle-channel frequency breaks the tie: lots of idle levels means the
light side, few means the heavy side.  The access probability is then
scaled so the expected admitted population lands on the peak.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analytic import SystemConfig
from .optimizer import (
    ThroughputMatrix,
    build_throughput_matrix,
    invert_throughput,
    optimal_lambda,
)
from .simulator import run_fixed_active


@dataclass
class BarringState:
    """Mutable controller state carried between observation periods."""

    p_access: float
    period_slots: int
    u_star: int
    idle_threshold: float
    matrix: ThroughputMatrix


@dataclass(frozen=True)
class PeriodObservation:
    """What the receiver measured over one period."""

    t_insta: float
    p_idle_insta: float


def classify_and_update(state: BarringState, obs: PeriodObservation) -> float:
    """Pick the congestion side, rescale access probability, return it.

    An idle frequency at or above the optimum's idle probability reads as
    light load; below it as heavy.  The new probability steers the expected
    admitted count to the target, capped at one so a light system opens up
    completely.
    """
    pair = invert_throughput(state.matrix, obs.t_insta)
    estimate = (
        pair.u_light if obs.p_idle_insta >= state.idle_threshold else pair.u_heavy
    )
    if estimate == 0:
        new_p = 1.0
    else:
        new_p = min(1.0, state.p_access * state.u_star / estimate)
    state.p_access = new_p
    return new_p


@dataclass(frozen=True)
class ScheduleBlock:
    """``users`` stations contending for ``slots`` consecutive slots."""

    slots: int
    users: int

    def __post_init__(self) -> None:
        if self.slots < 1:
            raise ValueError(f"slots must be >= 1, got {self.slots}")
        if self.users < 0:
            raise ValueError(f"users must be >= 0, got {self.users}")


@dataclass(frozen=True)
class UserSchedule:
    """Piecewise-constant offered population over the run."""

    blocks: tuple[ScheduleBlock, ...]

    def __post_init__(self) -> None:
        if not self.blocks:
            raise ValueError("schedule needs at least one block")

    def total_slots(self) -> int:
        return sum(b.slots for b in self.blocks)

    def users_at(self, slot: int) -> int:
        if slot < 0:
            raise ValueError(f"slot must be >= 0, got {slot}")
        offset = 0
        for b in self.blocks:
            offset += b.slots
            if slot < offset:
                return b.users
        raise ValueError(f"slot {slot} beyond schedule end {offset}")


@dataclass(frozen=True)
class PeriodRecord:
    """One observation period of a closed-loop run.

    ``p_access`` is the probability that was in effect during the period,
    not the one computed from it afterwards.
    """

    period: int
    start_slot: int
    users_total: int
    users_active: int
    t_insta: float
    p_idle_insta: float
    p_access: float


class ScenarioError(ValueError):
    """A scenario file failed validation."""


@dataclass(frozen=True)
class BarringScenario:
    """Everything needed to reproduce a closed-loop run."""

    cfg: SystemConfig
    schedule: UserSchedule
    period_slots: int
    seed: int
    barring: bool
    u_max: int = 500


def run_barring_scenario(
    cfg: SystemConfig,
    schedule: UserSchedule,
    period_slots: int,
    seed: int,
    barring_enabled: bool = True,
    u_max: int = 500,
) -> list[PeriodRecord]:
    """Run the closed loop over the schedule, one record per period.

    Stations admitted for a period are drawn once at its start with the
    current access probability and stay admitted for the whole period,
    re-picking channel and level every slot.  With barring disabled the
    probability is pinned at one, which is the uncontrolled reference.
    Trailing slots that do not fill a period are dropped.
    """
    if period_slots < 1:
        raise ValueError(f"period_slots must be >= 1, got {period_slots}")
    opt = optimal_lambda(cfg)
    matrix = build_throughput_matrix(cfg, u_max=u_max)
    u_star = round(opt.channel_load_star * cfg.n_channels)
    state = BarringState(
        p_access=1.0,
        period_slots=period_slots,
        u_star=u_star,
        idle_threshold=opt.idle_threshold,
        matrix=matrix,
    )
    rng = np.random.default_rng(seed)
    periods = schedule.total_slots() // period_slots
    records: list[PeriodRecord] = []
    for k in range(periods):
        start = k * period_slots
        users_total = schedule.users_at(start)
        p = state.p_access if barring_enabled else 1.0
        active = int(rng.binomial(users_total, p))
        t_norm, idle_freq = run_fixed_active(cfg, active, period_slots, rng)
        records.append(
            PeriodRecord(
                period=k,
                start_slot=start,
                users_total=users_total,
                users_active=active,
                t_insta=t_norm,
                p_idle_insta=idle_freq,
                p_access=p,
            )
        )
        if barring_enabled:
            classify_and_update(
                state, PeriodObservation(t_insta=t_norm, p_idle_insta=idle_freq)
            )
    return records


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ScenarioError(f"{path}: {message}")


def load_scenario(path: Path) -> BarringScenario:
    """Parse and validate a scenario file.

    Expected shape::

        {
          "n": 10, "l": 4,
          "period_slots": 25,
          "u_max": 500,          # optional
          "seed": 0,
          "barring": true,
          "schedule": [{"slots": 1250, "users": 20}, ...]
        }
    """
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc
    _require(isinstance(raw, dict), str(path), "top level must be an object")
    for key in ("n", "l", "period_slots", "seed", "barring", "schedule"):
        _require(key in raw, str(path), f"missing field {key!r}")
    for key in ("n", "l", "period_slots", "seed"):
        _require(
            isinstance(raw[key], int) and not isinstance(raw[key], bool),
            f"{path}:{key}",
            f"must be an integer, got {raw[key]!r}",
        )
    _require(
        isinstance(raw["barring"], bool),
        f"{path}:barring",
        f"must be true or false, got {raw['barring']!r}",
    )
    u_max = raw.get("u_max", 500)
    _require(
        isinstance(u_max, int) and not isinstance(u_max, bool) and u_max >= 1,
        f"{path}:u_max",
        f"must be a positive integer, got {u_max!r}",
    )
    _require(
        isinstance(raw["schedule"], list) and raw["schedule"],
        f"{path}:schedule",
        "must be a non-empty array",
    )
    blocks = []
    for j, entry in enumerate(raw["schedule"]):
        where = f"{path}:schedule[{j}]"
        _require(isinstance(entry, dict), where, "must be an object")
        for key in ("slots", "users"):
            _require(key in entry, where, f"missing field {key!r}")
            _require(
                isinstance(entry[key], int) and not isinstance(entry[key], bool),
                f"{where}.{key}",
                f"must be an integer, got {entry[key]!r}",
            )
        try:
            blocks.append(ScheduleBlock(slots=entry["slots"], users=entry["users"]))
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
    try:
        cfg = SystemConfig(n_channels=raw["n"], n_levels=raw["l"])
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    _require(raw["period_slots"] >= 1, f"{path}:period_slots", "must be >= 1")
    _require(raw["seed"] >= 0, f"{path}:seed", "must be >= 0")
    return BarringScenario(
        cfg=cfg,
        schedule=UserSchedule(blocks=tuple(blocks)),
        period_slots=raw["period_slots"],
        seed=raw["seed"],
        barring=raw["barring"],
        u_max=u_max,
    )
