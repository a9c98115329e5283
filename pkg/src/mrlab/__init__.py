"""mrlab: a deterministic single-process MapReduce engine and the
classic learning algorithms expressed as Map/Reduce jobs (aggregation,
simple random sampling, k-means, linear and logistic regression,
Poisson-resampled random forests)."""

from .aggregates import (
    CallRecord,
    avg_duration_by_date,
    calls_per_date_number,
    read_call_csv,
    word_count,
)
from .engine import (
    DISK,
    MEMORY,
    ClusterConfig,
    InputSplit,
    JobSpec,
    KeyValue,
    RunStats,
    partition,
    run_iterative,
    run_job,
    shuffle,
)
from .errors import (
    DivergenceError,
    EmptyInputError,
    JobExecutionError,
    MRLabError,
    ParameterError,
    RowParseError,
    SingularMatrixError,
)
from .forest import (
    ForestModel,
    ForestParams,
    TreeModel,
    fit_forest,
    predict_forest,
)
from .kmeans import CenterSet, assign, fit_kmeans, recompute
from .linmodels import (
    DataMatrix,
    GramPair,
    LinearModel,
    fit_linear,
    fit_logistic,
    gram_job,
    logistic_gradient_job,
    solve_normal_equations,
)
from .sampling import (
    ScanResult,
    ScanState,
    bernstein_thresholds,
    reservoir_sample,
    scan_srs,
    sort_sample,
)

__version__ = "0.1.0"

__all__ = [
    "CallRecord",
    "CenterSet",
    "ClusterConfig",
    "DISK",
    "DataMatrix",
    "DivergenceError",
    "EmptyInputError",
    "ForestModel",
    "ForestParams",
    "GramPair",
    "InputSplit",
    "JobExecutionError",
    "JobSpec",
    "KeyValue",
    "LinearModel",
    "MEMORY",
    "MRLabError",
    "ParameterError",
    "RowParseError",
    "RunStats",
    "ScanResult",
    "ScanState",
    "SingularMatrixError",
    "TreeModel",
    "assign",
    "avg_duration_by_date",
    "bernstein_thresholds",
    "calls_per_date_number",
    "fit_forest",
    "fit_kmeans",
    "fit_linear",
    "fit_logistic",
    "gram_job",
    "logistic_gradient_job",
    "partition",
    "predict_forest",
    "read_call_csv",
    "recompute",
    "reservoir_sample",
    "run_iterative",
    "run_job",
    "scan_srs",
    "shuffle",
    "solve_normal_equations",
    "sort_sample",
    "word_count",
]
