"""Fusion-resilient anonymization of identifier-bearing tables.

Microaggregate quasi-identifiers into k-anonymous releases, simulate an
adversary who fuses the release with auxiliary data through a Mamdani fuzzy
system, and pick the anonymization level with the best weighted protection
plus utility.
"""

__version__ = "0.1.0"

from .anonymizer import (
    AnonymizedRelease,
    Partition,
    basic_anonymization,
    equivalence_class_sizes,
    identity_release,
    level_to_k,
    mdav_partition,
)
from .data import (
    AttributeSchema,
    Column,
    Dataset,
    JoinedView,
    NormalizationParams,
    ValidationError,
    join_on_identifier,
    load_dataset,
    load_schema,
    normalize,
    numeric_view,
)
from .fred import CandidateRecord, FredConfig, FredResult, fred_anonymize, is_fusion_resilient, select_optimal
from .fuzzy import (
    FuzzyInferenceSystem,
    FuzzyRule,
    FuzzyVariable,
    MembershipFunction,
    evaluate_rule,
    fuse,
    fuzzify,
    infer_record,
    parse_fis,
)
from .metrics import (
    DissimilarityValue,
    MetricSet,
    ObjectiveConfig,
    UtilityValue,
    discernibility_cost,
    dissimilarity,
    information_gain,
    objective_scalar,
    objective_trace_weighted,
    utility,
)
