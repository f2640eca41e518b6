"""Binary stochastic filters for feature, unit and region selection."""

from ._bsfilter import (
    DEFAULT_TAU,
    CapacityError,
    Dataset,
    DegenerateModelError,
    DomainError,
    Estimator,
    ExperimentConfig,
    InputError,
    MaskMode,
    Network,
    ObjectiveInstance,
    Optimizer,
    PruningConfig,
    RegionConfig,
    SelectionConfig,
    ShapeError,
    StateError,
    StructureError,
    TrainConfig,
    TrainingError,
    analytic_gradient_p,
    analytic_objective,
    brute_force_objective,
    default_lambda_grid,
    forward_infer,
    forward_train,
    geometric_grid,
    load_csv,
    make_informative,
    make_spectra,
    monte_carlo_objective,
    prune,
    prune_sweep,
    run_lab,
    select_features,
    select_regions,
)

__version__ = "0.1.0"
