"""Zero-sum placement game between an attacker and a detector.

Rows of the payoff matrix are attack vertices (the maximizer picks where to
inject), columns are candidate monitor placements (the minimizer picks where
to measure), and entries are scenario value-at-risk impacts.  A column
containing an unbounded entry cannot secure the network and is removed before
solving; if nothing survives there is no secure placement at all.

The mixed equilibrium comes from two independent linear programs, one per
player, each solved by a small dense simplex with Bland's pivoting rule on
the positively shifted matrix.  Solving both sides separately makes the
duality gap a genuine cross-check rather than an identity, and the solution
is verified against the no-deviation property before it is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from sentinet.netgraph import ConfigError
from sentinet.risk import RiskEstimate

SUPPORT_TOL = 1e-9
_GAP_TOL = 1e-8


class NoSecurePlacementError(RuntimeError):
    """Every candidate placement leaves some attack with unbounded impact."""


@dataclass(frozen=True)
class PayoffMatrix:
    """Value-at-risk payoffs on the attack x monitor grid.

    ``values[i, j]`` is the risk of attack ``attack_vertices[i]`` under
    monitor ``monitor_vertices[j]``; ``math.inf`` marks an unsecurable cell.
    """

    attack_vertices: tuple[int, ...]
    monitor_vertices: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        shape = (len(self.attack_vertices), len(self.monitor_vertices))
        if vals.ndim != 2 or vals.shape != shape:
            raise ConfigError(
                f"payoff matrix must be {shape[0]}x{shape[1]}, got {vals.shape}"
            )
        if np.any(np.isnan(vals)) or np.any(np.isneginf(vals)):
            raise ConfigError("payoffs must be finite or +infinity")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class GameSolution:
    """Equilibrium of the placement game.

    Mixes are indexed like the payoff matrix axes; pruned monitor columns
    keep an exact zero weight.  ``pure_saddle`` names the (attack, monitor)
    vertices of a saddle point of the reduced game when one exists.
    """

    value: float
    attacker_mix: np.ndarray
    detector_mix: np.ndarray
    pure_saddle: tuple[int, int] | None
    attacker_support: tuple[int, ...]
    detector_support: tuple[int, ...]
    pruned_monitors: tuple[int, ...]
    # disagreement between the two independently solved sides; the solver
    # rejects solutions where this exceeds its internal tolerance, so the
    # recorded value mainly serves audits
    duality_gap: float = 0.0


def assemble_payoffs(estimates: Sequence[RiskEstimate], level: float) -> PayoffMatrix:
    """Arrange per-pair risk estimates into the full payoff grid.

    Attack and monitor vertex sets are the distinct coordinates seen in the
    estimates; every combination must be present exactly once.
    """

    if not estimates:
        raise ConfigError("no risk estimates to assemble")
    seen: dict[tuple[int, int], float] = {}
    for est in estimates:
        if est.pair in seen:
            raise ConfigError(f"duplicate risk estimate for pair {est.pair}")
        if level not in est.var_by_level:
            raise ConfigError(
                f"estimate for pair {est.pair} has no value at risk level {level}"
            )
        seen[est.pair] = est.var_by_level[level]
    attacks = tuple(sorted({a for a, _ in seen}))
    monitors = tuple(sorted({m for _, m in seen}))
    values = np.empty((len(attacks), len(monitors)))
    for i, a in enumerate(attacks):
        for j, m in enumerate(monitors):
            if (a, m) not in seen:
                raise ConfigError(f"missing risk estimate for pair ({a}, {m})")
            values[i, j] = seen[(a, m)]
    return PayoffMatrix(attacks, monitors, values)


def expected_payoff(
    payoffs: PayoffMatrix, attacker_mix: np.ndarray, detector_mix: np.ndarray
) -> float:
    """Bilinear payoff of a strategy profile.

    Cells that either player avoids entirely contribute nothing even when
    unbounded; a positively weighted unbounded cell makes the result inf.
    """

    p = np.asarray(attacker_mix, dtype=float)
    q = np.asarray(detector_mix, dtype=float)
    if p.shape != (len(payoffs.attack_vertices),):
        raise ConfigError(
            f"attacker mix must have length {len(payoffs.attack_vertices)}"
        )
    if q.shape != (len(payoffs.monitor_vertices),):
        raise ConfigError(
            f"detector mix must have length {len(payoffs.monitor_vertices)}"
        )
    weight = np.outer(p, q)
    active = weight != 0.0
    if np.any(active & np.isinf(payoffs.values)):
        return math.inf
    return float(np.sum(weight[active] * payoffs.values[active]))


def find_pure_saddle(payoffs: PayoffMatrix) -> tuple[int, int] | None:
    """First entry (row-major) that is both the largest in its column and the
    smallest in its row, as (attack_vertex, monitor_vertex); None if the game
    has no saddle in pure strategies."""

    vals = payoffs.values
    if vals.size == 0:
        return None
    col_max = vals.max(axis=0)
    row_min = vals.min(axis=1)
    for i in range(vals.shape[0]):
        for j in range(vals.shape[1]):
            v = vals[i, j]
            if v == col_max[j] and v == row_min[i]:
                return (payoffs.attack_vertices[i], payoffs.monitor_vertices[j])
    return None


# ---------------------------------------------------------------------------
# simplex core
# ---------------------------------------------------------------------------


def _simplex_max_unit(a: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximize 1'x subject to a x <= 1, x >= 0 for elementwise-positive a.

    Dense tableau simplex from the all-slack basis.  Entering and leaving
    variables follow Bland's smallest-index rule, so the iteration cannot
    cycle; positivity of ``a`` keeps the feasible set bounded.
    """

    m_, n_ = a.shape
    tab = np.hstack([a, np.eye(m_), np.ones((m_, 1))])
    red = np.zeros(n_ + m_)
    red[:n_] = 1.0
    basis = np.arange(n_, n_ + m_)

    for _ in range(200 * (n_ + m_ + 5)):
        enter = -1
        for j in range(n_ + m_):
            if red[j] > 1e-11:
                enter = j
                break
        if enter < 0:
            x = np.zeros(n_ + m_)
            x[basis] = tab[:, -1]
            return float(x[:n_].sum()), x[:n_]
        col = tab[:, enter]
        leave = -1
        best = math.inf
        for i in range(m_):
            if col[i] > 1e-11:
                ratio = tab[i, -1] / col[i]
                if ratio < best - 1e-12 or (
                    abs(ratio - best) <= 1e-12
                    and (leave < 0 or basis[i] < basis[leave])
                ):
                    leave, best = i, ratio
        if leave < 0:
            raise ArithmeticError("simplex detected an unbounded direction")
        tab[leave] /= tab[leave, enter]
        for i in range(m_):
            if i != leave and tab[i, enter] != 0.0:
                tab[i] -= tab[i, enter] * tab[leave]
        red = red - red[enter] * tab[leave, :-1]
        basis[leave] = enter
    raise ArithmeticError("simplex failed to terminate")


def _one_sided_value(j_pos: np.ndarray) -> tuple[float, np.ndarray]:
    """Value and optimal column mix of the game ``j_pos`` for the column
    player (the minimizer), via the standard normalization x = q / value."""

    obj, x = _simplex_max_unit(j_pos)
    if obj <= 0.0:
        raise ArithmeticError("degenerate game transform; shift was not positive")
    value = 1.0 / obj
    q = np.clip(x * value, 0.0, None)
    return value, q / q.sum()


def solve_mixed_nash(payoffs: PayoffMatrix) -> GameSolution:
    """Equilibrium mixes and value of the placement game.

    Monitor columns with any unbounded entry are pruned first (the detector
    would never risk them; the attacker keeps every row).  Raises
    NoSecurePlacementError when no column survives, and ArithmeticError if
    the two independently solved sides disagree or a pure deviation beats
    the computed mixes, which would mean the solver itself is wrong.
    """

    vals = payoffs.values
    keep = [j for j in range(vals.shape[1]) if np.all(np.isfinite(vals[:, j]))]
    pruned = tuple(
        payoffs.monitor_vertices[j] for j in range(vals.shape[1]) if j not in keep
    )
    if not keep:
        raise NoSecurePlacementError(
            "every candidate monitor leaves some attack with unbounded risk"
        )
    sub = vals[:, keep]

    # detector side on the shifted matrix, attacker side on the shifted
    # negated transpose; the two solves share no state
    shift_d = 1.0 - float(sub.min())
    value_d, q = _one_sided_value(sub + shift_d)
    value_d -= shift_d

    neg_t = -sub.T
    shift_a = 1.0 - float(neg_t.min())
    value_a, p = _one_sided_value(neg_t + shift_a)
    value_a = -(value_a - shift_a)

    gap_tol = _GAP_TOL * max(1.0, abs(value_d))
    if abs(value_d - value_a) > gap_tol:
        raise ArithmeticError(
            f"detector and attacker solutions disagree: {value_d!r} vs {value_a!r}"
        )
    value = 0.5 * (value_d + value_a)

    guaranteed = sub.T @ p
    exposure = sub @ q
    if guaranteed.min() < value - gap_tol or exposure.max() > value + gap_tol:
        raise ArithmeticError("computed mixes admit a profitable pure deviation")

    detector_mix = np.zeros(vals.shape[1])
    detector_mix[keep] = q
    detector_mix.setflags(write=False)
    attacker_mix = p.copy()
    attacker_mix.setflags(write=False)

    reduced = PayoffMatrix(
        attack_vertices=payoffs.attack_vertices,
        monitor_vertices=tuple(payoffs.monitor_vertices[j] for j in keep),
        values=sub,
    )
    return GameSolution(
        value=float(value),
        attacker_mix=attacker_mix,
        detector_mix=detector_mix,
        pure_saddle=find_pure_saddle(reduced),
        attacker_support=tuple(
            v for v, w in zip(payoffs.attack_vertices, attacker_mix) if w > SUPPORT_TOL
        ),
        detector_support=tuple(
            v for v, w in zip(payoffs.monitor_vertices, detector_mix) if w > SUPPORT_TOL
        ),
        pruned_monitors=pruned,
        duality_gap=abs(value_d - value_a),
    )
