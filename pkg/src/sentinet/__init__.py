"""Risk-based monitor placement for networked systems under stealthy injection attacks.

The package is organised bottom-up:

* :mod:`sentinet.netgraph` -- uncertain network model and Laplacian sampling
* :mod:`sentinet.sysid`    -- structural analysis (relative degree, invariant zeros)
* :mod:`sentinet.sdp`      -- worst-case attack impact via semidefinite programming
* :mod:`sentinet.risk`     -- scenario-based value-at-risk aggregation
* :mod:`sentinet.game`     -- zero-sum placement game (pure saddle / mixed equilibria)
* :mod:`sentinet.cli`      -- command line front end and run artifacts
"""

__version__ = "0.1.0"

from sentinet.netgraph import (
    ConfigError,
    SampledLaplacian,
    UncertainNetwork,
    build_network,
    nominal_laplacian,
    sample_laplacian,
)
from sentinet.sysid import (
    SystemRealization,
    Verdict,
    ZeroReport,
    design_gain_shift,
    feasibility_verdict,
    invariant_zeros,
    realization,
    relative_degree,
)
from sentinet.sdp import (
    GridRefinementError,
    ImpactProblem,
    ImpactResult,
    SolverConvergenceError,
    assemble_lmi,
    impact_oracle_frequency,
    solve_impact,
)
from sentinet.risk import (
    RiskEstimate,
    RiskSampleError,
    ScenarioConfig,
    boundedness_check,
    empirical_var,
    estimate_pair_risk,
    required_samples,
)
from sentinet.game import (
    GameSolution,
    NoSecurePlacementError,
    PayoffMatrix,
    assemble_payoffs,
    expected_payoff,
    find_pure_saddle,
    solve_mixed_nash,
)

__all__ = [
    "__version__",
    "ConfigError",
    "UncertainNetwork",
    "SampledLaplacian",
    "build_network",
    "sample_laplacian",
    "nominal_laplacian",
    "SystemRealization",
    "ZeroReport",
    "Verdict",
    "realization",
    "relative_degree",
    "invariant_zeros",
    "design_gain_shift",
    "feasibility_verdict",
    "ImpactProblem",
    "ImpactResult",
    "SolverConvergenceError",
    "GridRefinementError",
    "assemble_lmi",
    "solve_impact",
    "impact_oracle_frequency",
    "ScenarioConfig",
    "RiskEstimate",
    "RiskSampleError",
    "required_samples",
    "empirical_var",
    "boundedness_check",
    "estimate_pair_risk",
    "PayoffMatrix",
    "GameSolution",
    "NoSecurePlacementError",
    "assemble_payoffs",
    "find_pure_saddle",
    "solve_mixed_nash",
    "expected_payoff",
]
