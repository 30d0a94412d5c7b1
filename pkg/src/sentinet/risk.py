"""Scenario-sampling risk layer.

Turns the per-realization worst-case impact into a value-at-risk style
payoff: draw a fixed number of network realizations, solve the impact
problem on each, and read the requested quantiles off the empirical
distribution.  The sample count carries a Hoeffding-type accuracy
certificate, exposed through :func:`required_samples`.

Unbounded impacts participate as ``math.inf``: they sort above every
finite value, and a risk level whose order statistic lands on one of
them reports an unbounded value-at-risk.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, MutableMapping, Sequence

from sentinet.netgraph import ConfigError, UncertainNetwork, nominal_laplacian, sample_laplacian
from sentinet.sdp import ImpactProblem, SolverConvergenceError, solve_impact
from sentinet.sysid import Verdict, feasibility_verdict, realization

__all__ = [
    "ScenarioConfig",
    "RiskEstimate",
    "RiskSampleError",
    "required_samples",
    "empirical_var",
    "boundedness_check",
    "estimate_pair_risk",
    "write_samples_csv",
    "var_table",
]

# relative guard against floating-point overshoot in ceil() of quantities
# that are exact rationals mathematically (e.g. 100 * (1 - 0.93))
_CEIL_GUARD = 1e-9


def _guarded_ceil(x: float) -> int:
    return math.ceil(x - _CEIL_GUARD * max(1.0, abs(x)))


class RiskSampleError(RuntimeError):
    """Solver failure on one scenario sample, with provenance attached."""

    def __init__(self, pair: tuple[int, int], sample_index: int, cause: Exception) -> None:
        super().__init__(
            f"impact solve failed for pair (a={pair[0]}, m={pair[1]}) "
            f"at sample {sample_index}: {cause}"
        )
        self.pair = pair
        self.sample_index = sample_index
        self.cause = cause


def required_samples(epsilon1: float, beta1: float) -> int:
    """Smallest sample count honouring the scenario accuracy certificate.

    Accuracy ``epsilon1`` and confidence ``beta1`` must both lie strictly
    inside (0, 1); the bound is (1 / (2 eps^2)) * ln(2 / beta), rounded up.
    """
    if not (0.0 < epsilon1 < 1.0):
        raise ConfigError(f"accuracy must lie in (0, 1), got {epsilon1}")
    if not (0.0 < beta1 < 1.0):
        raise ConfigError(f"confidence must lie in (0, 1), got {beta1}")
    bound = math.log(2.0 / beta1) / (2.0 * epsilon1 * epsilon1)
    return max(1, _guarded_ceil(bound))


def empirical_var(values: Iterable[float], beta: float) -> float:
    """Empirical value-at-risk: the k-th smallest sample, k = ceil(M(1-beta)).

    This is the smallest sample value whose empirical CDF reaches 1 - beta,
    with unbounded samples sorting above every finite one.
    """
    vals = [float(v) for v in values]
    if not vals:
        raise ConfigError("value-at-risk of an empty sample set is undefined")
    if not (0.0 < beta < 1.0):
        raise ConfigError(f"risk level must lie in (0, 1), got {beta}")
    m = len(vals)
    k = min(m, max(1, _guarded_ceil(m * (1.0 - beta))))
    vals.sort()
    return vals[k - 1]


def boundedness_check(values: Iterable[float], beta1: float) -> bool:
    """Whether enough samples are finite for a bounded risk readout."""
    vals = [float(v) for v in values]
    if not vals:
        raise ConfigError("boundedness of an empty sample set is undefined")
    if not (0.0 < beta1 < 1.0):
        raise ConfigError(f"confidence must lie in (0, 1), got {beta1}")
    needed = _guarded_ceil(len(vals) * (1.0 - beta1))
    finite = sum(1 for v in vals if math.isfinite(v))
    return finite >= needed


@dataclass(frozen=True)
class ScenarioConfig:
    """Sampling plan: accuracy certificate, sample count, risk levels, seed."""

    epsilon1: float
    beta1: float
    m1: int
    risk_levels: tuple[float, ...]
    master_seed: int
    allow_undersampled: bool = False

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon1 < 1.0):
            raise ConfigError(f"accuracy must lie in (0, 1), got {self.epsilon1}")
        if not (0.0 < self.beta1 < 1.0):
            raise ConfigError(f"confidence must lie in (0, 1), got {self.beta1}")
        if not isinstance(self.m1, int) or self.m1 < 1:
            raise ConfigError(f"sample count must be a positive integer, got {self.m1!r}")
        levels = tuple(float(b) for b in self.risk_levels)
        if not levels:
            raise ConfigError("at least one risk level is required")
        for b in levels:
            if not (0.0 < b < 1.0):
                raise ConfigError(f"risk level must lie in (0, 1), got {b}")
        object.__setattr__(self, "risk_levels", levels)
        needed = required_samples(self.epsilon1, self.beta1)
        if self.m1 < needed and not self.allow_undersampled:
            raise ConfigError(
                f"sample count {self.m1} is below the certified requirement "
                f"{needed} for accuracy {self.epsilon1} at confidence {self.beta1}"
            )


@dataclass(frozen=True)
class RiskEstimate:
    """Per-pair scenario sweep: raw sample values plus quantile readouts."""

    pair: tuple[int, int]
    sample_values: tuple[float, ...]
    var_by_level: dict[float, float] = field(compare=False)
    bounded_count: int = 0


# Per-sample level tolerance for scenario sweeps.  The sweep output feeds
# empirical quantiles and a payoff matrix judged on an order-of-magnitude
# scale, so certifying each of the hundreds of per-pair levels to the
# solver's default precision would spend most of the budget sharpening
# digits that no downstream consumer reads.  Antitonicity of the quantile
# readouts is unaffected: all levels of a pair read the same sample vector.
SWEEP_GAMMA_TOL = 1e-4


def _solve_sample(
    net: UncertainNetwork,
    pair: tuple[int, int],
    seed: int,
    index: int,
    alarm_threshold: float,
    hint: tuple[float, float] | None,
) -> float:
    sample = sample_laplacian(net, rng_seed=seed, index=index)
    sys = realization(sample, attack=pair[0], monitor=pair[1], target=net.target_vertex)
    problem = ImpactProblem(
        system=sys,
        alarm_threshold=alarm_threshold,
        bracket_hint=hint,
        gamma_abs_tol=SWEEP_GAMMA_TOL,
    )
    return solve_impact(problem).value


def _solve_sample_star(args: tuple) -> float:
    return _solve_sample(*args)


def estimate_pair_risk(
    net: UncertainNetwork,
    pair: tuple[int, int],
    cfg: ScenarioConfig,
    *,
    alarm_threshold: float = 1.0,
    workers: int = 1,
    cache: MutableMapping[tuple, float] | None = None,
) -> RiskEstimate:
    """Scenario sweep for one (attack, monitor) pair.

    Draws ``cfg.m1`` realizations from the network's uncertainty set, solves
    the worst-case impact problem on each and aggregates the empirical
    value-at-risk for every configured level.  The master seed makes the
    result deterministic; results are merged by sample index regardless of
    worker scheduling.

    A pair whose monitor is structurally blind on every realization (the
    relative-degree ordering fails, which depends only on the graph) is
    short-circuited to an all-unbounded estimate without touching the
    solver.
    """
    attack, monitor = int(pair[0]), int(pair[1])
    n = net.n_vertices
    for name, v in (("attack", attack), ("monitor", monitor)):
        if not (1 <= v <= n):
            raise ConfigError(f"{name} vertex {v} outside 1..{n}")
        if v == net.target_vertex:
            raise ConfigError(f"{name} vertex must differ from the target vertex")
    pair = (attack, monitor)

    nominal = realization(
        nominal_laplacian(net), attack=attack, monitor=monitor, target=net.target_vertex
    )
    if feasibility_verdict(nominal) is Verdict.INFEASIBLE_RELATIVE_DEGREE:
        values = tuple([math.inf] * cfg.m1)
        var = {b: math.inf for b in cfg.risk_levels}
        return RiskEstimate(pair=pair, sample_values=values, var_by_level=var, bounded_count=0)

    # one nominal solve warms the per-sample bracket; it is shared by every
    # sample so the result does not depend on evaluation order
    hint: tuple[float, float] | None = None
    if feasibility_verdict(nominal) is Verdict.FEASIBLE:
        nominal_result = solve_impact(
            ImpactProblem(system=nominal, alarm_threshold=alarm_threshold)
        )
        if not nominal_result.is_unbounded:
            hint = (0.0, 1.25 * nominal_result.value)

    indices = range(1, cfg.m1 + 1)
    results: dict[int, float] = {}
    pending: list[int] = []
    for index in indices:
        key = (cfg.master_seed, index, attack, monitor, alarm_threshold)
        if cache is not None and key in cache:
            results[index] = cache[key]
        else:
            pending.append(index)

    def record(index: int, value: float) -> None:
        results[index] = value
        if cache is not None:
            cache[(cfg.master_seed, index, attack, monitor, alarm_threshold)] = value

    if workers <= 1 or len(pending) <= 1:
        for index in pending:
            try:
                record(index, _solve_sample(net, pair, cfg.master_seed, index, alarm_threshold, hint))
            except (SolverConvergenceError, ArithmeticError) as exc:
                raise RiskSampleError(pair, index, exc) from exc
    else:
        jobs = [
            (net, pair, cfg.master_seed, index, alarm_threshold, hint) for index in pending
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            try:
                for index, value in zip(pending, pool.map(_solve_sample_star, jobs)):
                    record(index, value)
            except (SolverConvergenceError, ArithmeticError) as exc:
                raise RiskSampleError(pair, -1, exc) from exc

    values = tuple(results[i] for i in indices)
    var = {b: empirical_var(values, b) for b in cfg.risk_levels}
    bounded = sum(1 for v in values if math.isfinite(v))
    return RiskEstimate(pair=pair, sample_values=values, var_by_level=var, bounded_count=bounded)


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------


def _pair_key(pair: tuple[int, int]) -> str:
    return f"a{pair[0]}-m{pair[1]}"


def _format_value(v: float) -> str:
    return "Unbounded" if math.isinf(v) else f"{v:.12g}"


def write_samples_csv(estimates: Sequence[RiskEstimate], path) -> None:
    """Raw per-sample impact values, one row per (pair, sample index)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair", "sample_index", "gamma_star"])
        for est in estimates:
            key = _pair_key(est.pair)
            for index, value in enumerate(est.sample_values, start=1):
                writer.writerow([key, index, _format_value(value)])


def var_table(estimates: Sequence[RiskEstimate]) -> dict:
    """Nested mapping pair -> level -> value-at-risk, JSON-ready."""
    table: dict[str, dict[str, object]] = {}
    for est in estimates:
        row: dict[str, object] = {}
        for level in sorted(est.var_by_level):
            v = est.var_by_level[level]
            row[f"{level:.6g}"] = "Unbounded" if math.isinf(v) else v
        table[_pair_key(est.pair)] = row
    return table
