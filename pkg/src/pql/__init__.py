"""Private sequential learning: replicated bisection, eavesdropping adversaries and query-complexity bounds."""
from pql.adversaries import (
    last_query_attack,
    proportional_point,
    proportional_sample,
    rb_candidate_attack,
    reconstruct_offset_bits,
    uniform_random_attack,
)
from pql.cells import CellCounts, EmptyCountsError, tally_cells
from pql.harness import ExperimentConfig, SummaryStats, TrialRecord, run_experiment, run_trial, sweep
from pql.learners import LearnerKind, LearnerSpec, bisection_run, rb_query_count, rb_run, rbd_run
from pql.model import (
    CellIndex,
    ConfigurationError,
    Hyperplane,
    MalformedQueryError,
    QueryPoint,
    Target,
    Transcript,
    UniformPartition,
    binary_entropy,
    binary_expansion,
    cell_bounds,
    cell_index,
    respond_1d,
    respond_hyperplane,
)
from pql.observation import ChannelKind, ChannelSpec, Observation, observe
from pql.rng import derive_trial_seed

__version__ = "0.1.0"
