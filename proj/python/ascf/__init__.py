from ._ascf import (
    AscfError,
    Dataset,
    FeatureManifest,
    LearningCurve,
    Session,
    __version__,
    aggregate_and_compare,
    asymmetry_b,
    f1_score,
    fit_bootstrap_ensemble,
    fit_linear,
    fit_logistic,
    load_dataset,
    load_manifest,
    make_splits,
    percentile,
    run_benchmark,
    s_ascf_utility,
    u_ascf_utility,
    wilcoxon_signed_rank,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
