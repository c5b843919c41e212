"""Toolkit for detecting contradictions between mobile-app privacy policies
and observed app behavior, per release and over time.

Pipeline: archived policy pages are segmented and classified into
(PII, procedure, party) disclosure triples; decompiled app trees and
captured network flows yield static and dynamic PII leaks; the union of
both leak views is checked against the disclosures, with per-version and
longitudinal reporting on top.
"""

from .archive import (
    AppRelease,
    FixtureStore,
    PolicySnapshot,
    TimeGateClient,
    assign_policy_to_release,
    fetch_snapshots,
    load_captures,
)
from .classifier import (
    AnnotatedSegment,
    ClassifierSuite,
    EvaluationReport,
    LinearModel,
    PolicyDisclosureProfile,
    aggregate_policy,
    classify_segment,
    derive_practices,
    evaluate_suite,
    train_binary,
    train_suite,
)
from .compliance import (
    CombinedLeakSet,
    DomainDisclosureReport,
    MappingTable,
    ViolationRecord,
    check_compliance,
    check_domain_disclosure,
    compare_versions,
    map_dynamic,
    union_leaks,
)
from .dynamic_analysis import (
    DecisionTree,
    DeviceProfile,
    FlowRecord,
    PiiRule,
    extract_pii,
    flow_feature_text,
    predict_leak,
    train_leak_classifier,
)
from .features import (
    FeatureVector,
    KeywordCatalog,
    Vocabulary,
    featurize,
    fit_vocabulary,
    indicator_vector,
    tfidf_vector,
)
from .labels import (
    CLASSIFIER_LABELS,
    DYNAMIC_LABELS,
    FIRST_PARTY,
    PII_LABELS,
    PracticeDisclosure,
    THIRD_PARTY,
)
from .policy_text import (
    Segment,
    extract_policy_text,
    extract_text,
    normalize_segment,
    segment_policy,
)
from .reporting import (
    DatasetManifest,
    aggregate_annual,
    aggregate_deltas,
    cdf_points,
    rank_undisclosed_domains,
    run_pipeline,
)
from .static_analysis import (
    ApiCatalog,
    ApkArtifact,
    OwnershipMap,
    StaticLeak,
    analyze_apk,
    attribute_party,
    detect_static_leaks,
    expand_ownership,
    parse_manifest,
    scan_smali,
)

__version__ = "0.1.0"
