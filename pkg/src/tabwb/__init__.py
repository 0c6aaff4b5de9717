"""tabwb: a leakage-safe predictive modeling workbench for tabular data.

The core promise: every preprocessing and modeling decision is made inside
the training side of each evaluation unit, and that discipline is
checkable (AccessLedger) and reproducible (seeded derivations, canonical
content digests) rather than assumed.
"""

__version__ = "0.1.0"

from .canon import canonical_json, content_digest, derive_seed
from .dataset import (
    Column,
    Dataset,
    SplitIndices,
    SummaryStats,
    detect_outliers,
    drop_flagged,
    find_duplicate_columns,
    global_split,
    load_csv,
    set_role,
    summarize,
)
from .errors import (
    BindingError,
    ConfigError,
    FingerprintMismatchError,
    MetricUndefinedError,
    ParseError,
    SchemaMismatchError,
    UnsupportedMethodError,
    WorkbenchError,
)
from .evaluate import (
    AccessLedger,
    EvalReport,
    evaluate,
    final_test,
    nested_evaluate,
    subset_run,
    winning_config,
)
from .folds import CVScheme, make_folds
from .importance import (
    ImportanceReport,
    coef_importance,
    permutation_importance,
    permuted_target_significance,
    shapley_explain,
)
from .metrics import METRICS, get_metric, score
from .params import Choice, Fixed, FloatRange, IntRange
from .pipeline import (
    ParamConfig,
    PipelineSpec,
    Select,
    StepSpec,
    bind,
    enumerate_configs,
    preset_step,
    sample,
    space_cardinality,
    validate,
)
from .search import SearchStrategy, SearchTrace, best_of, optimize
from .workflow import execute_run, replay_run

__all__ = [
    "__version__",
    "canonical_json", "content_digest", "derive_seed",
    "Column", "Dataset", "SplitIndices", "SummaryStats",
    "detect_outliers", "drop_flagged", "find_duplicate_columns",
    "global_split", "load_csv", "set_role", "summarize",
    "BindingError", "ConfigError", "FingerprintMismatchError",
    "MetricUndefinedError", "ParseError", "SchemaMismatchError",
    "UnsupportedMethodError", "WorkbenchError",
    "AccessLedger", "EvalReport", "evaluate", "final_test",
    "nested_evaluate", "subset_run", "winning_config",
    "CVScheme", "make_folds",
    "ImportanceReport", "coef_importance", "permutation_importance",
    "permuted_target_significance", "shapley_explain",
    "METRICS", "get_metric", "score",
    "Choice", "Fixed", "FloatRange", "IntRange",
    "ParamConfig", "PipelineSpec", "Select", "StepSpec", "bind",
    "enumerate_configs", "preset_step", "sample", "space_cardinality",
    "validate",
    "SearchStrategy", "SearchTrace", "best_of", "optimize",
    "execute_run", "replay_run",
]
