"""Exact simulation and statistical validation of dynamic random
intersection graphs with ON/OFF Markov communities."""

from .params import (
    ConfigError, DegenerateWeightsError, FiniteGroupSizes, GroupSizeLaw,
    InvalidGroupError, ModelConfig, PowerLawGroupSizes, WeightModel,
    group_rate, group_rate_exact, regularity_report,
    stationary_on_probability, supercriticality_parameter,
)
from .sampling import (
    AliasTable, BipartiteState, InstanceTooLargeError,
    enumerate_stationary_law, poisson_coupling_bound, sample_stationary,
)
from .dynamics import (
    ActivationMark, HorizonError, Timeline, equivalence_bound, sample_rescaled,
    simulate, union_inclusion_probability,
)
from .projection import (
    CliqueGuardError, ProjectedMultigraph, degree_process, project,
)
from .analysis import (
    DegreeCensus, GiantSolution, InsufficientSampleError, LimitLaws,
    TruncationError, UnsupportedLawError, degree_law_oracle, giant_fraction,
    giant_trajectory, kmax_limit_cdf, kmax_step_process, ks_statistic,
    mark_cdf, mark_cdf_prelimit, mark_law_test, solve_giant, tv_degree_test,
)
from .local_limit import (
    CensusReport, PopulationExplosionError, RootedBall, TwoTypeTree,
    UnsupportedRootError, canonical_code, census_compare, extract_ball,
    project_bp, sample_bp,
)
from .bcm import (
    BalanceError, BipartiteMultigraph, DegreeSequencePair, bcm_law,
    enumerate_bcm, sample_bcm, verify_bcm_law, verify_bcm_uniform_given_simple,
    verify_bgrg_uniform_given_degrees, verify_bridge,
)

__version__ = "1.0.0"
