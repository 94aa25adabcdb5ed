"""Reference-free evaluation toolkit for structured generative search summaries."""

from .errors import DataError, LabellingError, SgssError, UncoveredTargetError
from .labels import (
    AggregatedScores,
    CriterionTarget,
    Grade3,
    GradeMapping,
    LabelRecord,
    PreferenceRecord,
    aggregate,
    derive_degraded_labels,
    grade_to_score,
)
from .measure import (
    EvalReport,
    FitConfig,
    FitResult,
    PreferencePair,
    SgssWeights,
    agreement_rate,
    delta_sgss,
    evaluate_pairs,
    feature_vector,
    fit_weights,
    mean_agreement_rate,
    sgss_score,
    train_test_split,
)
from .model import (
    DocEntry,
    Line,
    Overview,
    Query,
    Section,
    Statement,
    StructuredSummary,
    degrade_no_headings,
    degrade_no_section1,
    enumerate_lines,
    line_count,
    truncate_lines,
    validate,
)
from .comp import build_pool, comp_report, comprehensiveness, jsd, to_pmf
from .xux import (
    Apd,
    LmaxConfig,
    XuxReport,
    XuxWeights,
    compute_report,
    decompose_phi,
    estimate_lmax,
    heading_representativeness,
    line_prefix_score,
    overview_quality,
    user_experience,
    xux,
    xux_f,
    xux_general,
)

__version__ = "0.1.0"
