"""Carbon tax planning for power systems.

Core pieces: representative-day unit commitment with a carbon tax
(taxgrid.ucct), bisection search for the smallest rate meeting an
emissions target (taxgrid.search), emission-cap marginal values and
Pareto sampling (same module), annual attainment probabilities
(taxgrid.uncertainty), representative-day clustering (taxgrid.repdays),
and a self-contained mixed-binary LP solver (taxgrid.milp).
"""

__version__ = "0.1.0"

from .milp import SolverConfig
from .search import (CemvResult, InfeasibleTargetError, ParetoPoint,
                     ParetoSample, SolveCache, TaxSearchConfig,
                     TaxSearchResult, cemv, sample_pareto_by_cap,
                     sample_pareto_by_tax, wsb)
from .system import (BuildFlags, ScenarioSpec, SystemData, apply_scenario,
                     load_scenario, load_system, system_from_dict, validate)
from .ucct import (UcctDaySolution, UcctInfeasibleError, UcctResult,
                   extract_prices, solve_ucct)
from .uncertainty import (EmissionsDistribution, attainment_probability,
                          emissions_distribution, normal_cdf)

__all__ = [
    "__version__",
    "SolverConfig",
    "CemvResult", "InfeasibleTargetError", "ParetoPoint", "ParetoSample",
    "SolveCache", "TaxSearchConfig", "TaxSearchResult", "cemv",
    "sample_pareto_by_cap", "sample_pareto_by_tax", "wsb",
    "BuildFlags", "ScenarioSpec", "SystemData", "apply_scenario",
    "load_scenario", "load_system", "system_from_dict", "validate",
    "UcctDaySolution", "UcctInfeasibleError", "UcctResult",
    "extract_prices", "solve_ucct",
    "EmissionsDistribution", "attainment_probability",
    "emissions_distribution", "normal_cdf",
]
