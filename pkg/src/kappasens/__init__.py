"""Spectral sensitivity of directed weighted networks.

Generalized algebraic connectivity (kappa), its first-order edge
sensitivities, sensitivity-guided edge modification and nonlinear
consensus simulations.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    AssumptionError,
    BranchAmbiguityError,
    ConfigError,
    EdgeListParseError,
    GraphError,
    IntegrationError,
    KappaSensError,
    StaleFactorizationError,
)
from .graph import (  # noqa: E402
    DirectedEdge,
    DirectedWeightedGraph,
    EdgeSet,
    apply_perturbation,
    largest_scc,
    load_edge_list,
    load_graph,
    save_edge_list,
)
from .generators import generate_er, generate_layered_example, generate_small_world  # noqa: E402
from .spectral import (  # noqa: E402
    build_laplacian,
    check_assumptions,
    gamma,
    generalized_connectivity,
    spectral_state,
    stationary_vector,
)
from .sensitivity import (  # noqa: E402
    finite_difference_check,
    gamma_sensitivity,
    kappa_sensitivity_edge,
    kappa_sensitivity_set,
    sensitivities,
)
from .modify import (  # noqa: E402
    BudgetConfig,
    DiscreteConfig,
    ModificationTrace,
    WeakenConfig,
    budget_strengthening,
    discrete_modify,
    iterative_weakening,
)
from .baselines import BaselineConfig, baseline_modify  # noqa: E402
from .dynamics import (  # noqa: E402
    FirstOrderSystem,
    SecondOrderSystem,
    SimConfig,
    error_series,
    integrate,
    run_experiment,
    windowed_error,
)
from .estimators import (  # noqa: E402
    BaselineStrengthening,
    BudgetStrengthening,
    DiscreteEdgeModifier,
    GeneralizedConnectivity,
    KappaSensitivity,
    SensitivityWeakening,
)
