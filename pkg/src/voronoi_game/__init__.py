"""One-round facility placement games on point sets, with an exact follower."""

from .best_response import (
    BestResponse,
    best_response,
    brute_force_best_response,
    halfcell_response,
    sector_witness,
)
from .epsilon_table import (
    EpsilonTable,
    approx_factor,
    build_table,
    crossover_k,
    net_factor,
    winning_threshold,
)
from .errors import (
    DegeneracyError,
    DegenerateStrategyError,
    DimensionMismatchError,
    VerificationError,
    VoronoiGameError,
)
from .game_engine import (
    GameResult,
    InstanceSpec,
    generate_users,
    play,
    run_batch,
    run_suite,
    verify_bounds,
)
from .geometry import (
    Disk,
    FacilitySet,
    Point,
    UserSet,
    payoff,
    tukey_depth,
)
from .p1_strategies import (
    Strategy,
    build_ball_net,
    build_disk_net,
    build_E_k,
    centerpoint,
    centerpoint_strategy,
    min_k_enclosing_ball,
    min_k_enclosing_disk,
)

__version__ = "0.1.0"
