"""Reservoir computing classifiers for multivariate time series.

The heavy lifting lives in the compiled ``_core`` extension. Configuration
keys are the same as in the command line tool's config files, e.g.::

    cfg = rmesn.Config({"representation": "reservoir", "dimred.components": 50})
    model = rmesn.fit(cfg.with_seed(3), train)
    labels = model.predict(test)

``with_seed`` derives the reservoir and readout seeds from one number; a bare
``Config`` uses seed 0 everywhere.
"""

from ._core import (
    Config,
    Dataset,
    Error,
    InvalidArgument,
    InvalidInput,
    Model,
    NumericalError,
    ParseError,
    compute_metrics,
    crossval_d_sweep,
    fit,
    generate_synthetic,
    import_ts,
    load_dataset,
    load_model,
    num_threads,
    repeat_trials,
    reservoir_states,
    ridge_solve,
    run_pipeline,
    save_dataset,
    set_num_threads,
    split,
)

__all__ = [
    "Config",
    "Dataset",
    "Error",
    "InvalidArgument",
    "InvalidInput",
    "Model",
    "NumericalError",
    "ParseError",
    "compute_metrics",
    "crossval_d_sweep",
    "fit",
    "generate_synthetic",
    "import_ts",
    "load_dataset",
    "load_model",
    "num_threads",
    "repeat_trials",
    "reservoir_states",
    "ridge_solve",
    "run_pipeline",
    "save_dataset",
    "set_num_threads",
    "split",
]
