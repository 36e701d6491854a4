"""Random access with layered received power: analysis, simulation, control.

Packets in a slot each pick one of N channels and one of L received-power
levels.  The receiver on every channel peels levels strongest first; a level
holding two or more packets is a power collision that stops decoding there
and loses every weaker level.  This package provides the closed-form
throughput and idle-channel results for that scheme, single-channel ALOHA
baselines with and without capture, a seeded slot simulator, and the
adaptive user-barring controller that steers the system to its optimal load.
"""

from .analytic import (
    SystemConfig,
    PowerLevelSet,
    capture_throughput_binomial,
    capture_throughput_poisson,
    cond_success_prob,
    cond_throughput,
    idle_channel_prob,
    msaloha_throughput_binomial,
    msaloha_throughput_poisson,
    power_levels,
    throughput_binomial,
    throughput_poisson,
)
from .optimizer import (
    LoadEstimatePair,
    OptimalPoint,
    ThroughputMatrix,
    build_throughput_matrix,
    invert_throughput,
    max_gain_ratio,
    optimal_lambda,
    throughput_derivative,
)
from .simulator import (
    ArrivalModel,
    BernoulliUsers,
    CaptureSemantics,
    ChannelOutcome,
    PoissonPerLevel,
    Scheme,
    SimStats,
    SlotOutcome,
    decode_channel_capture,
    decode_channel_sic,
    run_fixed_active,
    run_fixed_load,
    run_slot,
)
from .barring import (
    BarringScenario,
    BarringState,
    PeriodObservation,
    PeriodRecord,
    ScenarioError,
    ScheduleBlock,
    UserSchedule,
    classify_and_update,
    load_scenario,
    run_barring_scenario,
)

__version__ = "0.1.0"
