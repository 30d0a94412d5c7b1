"""Uncertain network model and Laplacian sampling.

A network is an undirected weighted graph with per-vertex self-loop gains and
per-edge interval uncertainty on the coupling weights.  The state matrix of
every sampled realization is the negated Laplacian-plus-gains matrix, which is
Hurwitz whenever all self-loop gains are positive and no sampled coupling
changes sign.

Vertices are labelled ``1..N`` to match the usual case-study conventions;
matrix rows/columns use 0-based positions internally.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping

import numpy as np

Edge = tuple[int, int]


class ConfigError(ValueError):
    """Raised when a network or run description is structurally invalid."""


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class UncertainNetwork:
    """Immutable description of an uncertain networked system.

    Attributes:
        n_vertices: number of vertices N.
        edges: canonical (i < j) sorted edge tuples, 1-based labels.
        nominal_weight: edge -> nominal off-diagonal Laplacian entry (negative
            for an attracting coupling).
        uncertainty_bound: edge -> (lo, hi) additive interval for the sampled
            perturbation of the off-diagonal entry.
        self_loop_gains: per-vertex positive gains (any uniform stabilising
            offset is already folded in).
        target_vertex: the protected vertex whose output defines attack impact.
    """

    n_vertices: int
    edges: tuple[Edge, ...]
    nominal_weight: Mapping[Edge, float]
    uncertainty_bound: Mapping[Edge, tuple[float, float]]
    self_loop_gains: np.ndarray
    target_vertex: int

    def __post_init__(self) -> None:
        n = self.n_vertices
        if n < 2:
            raise ConfigError(f"need at least 2 vertices, got {n}")
        gains = np.array(self.self_loop_gains, dtype=float)
        if gains.shape != (n,):
            raise ConfigError(
                f"self_loop_gains must have shape ({n},), got {gains.shape}"
            )
        if not np.all(np.isfinite(gains)) or np.any(gains <= 0.0):
            raise ConfigError("self-loop gains must be finite and strictly positive")
        gains.flags.writeable = False
        object.__setattr__(self, "self_loop_gains", gains)

        if not 1 <= self.target_vertex <= n:
            raise ConfigError(
                f"target_vertex {self.target_vertex} out of range 1..{n}"
            )

        seen: set[Edge] = set()
        for i, j in self.edges:
            if not (1 <= i <= n and 1 <= j <= n):
                raise ConfigError(f"edge ({i}, {j}) out of range 1..{n}")
            if i == j:
                raise ConfigError(f"self-loop edge ({i}, {j}) is not allowed")
            if i > j:
                raise ConfigError(f"edge ({i}, {j}) is not in canonical (i < j) form")
            if (i, j) in seen:
                raise ConfigError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        if tuple(sorted(self.edges)) != self.edges:
            raise ConfigError("edges must be sorted canonically")

        for e in self.edges:
            w = self.nominal_weight.get(e)
            if w is None or not math.isfinite(w):
                raise ConfigError(f"missing or non-finite nominal weight for edge {e}")
            bound = self.uncertainty_bound.get(e)
            if bound is None:
                raise ConfigError(f"missing uncertainty bound for edge {e}")
            lo, hi = bound
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"uncertainty bound for edge {e} must be bounded")
            if lo > hi:
                raise ConfigError(f"empty uncertainty interval for edge {e}")
            if w + hi > 0.0:
                # A sign flip of the off-diagonal entry would break the
                # Laplacian structure that guarantees stability.
                raise ConfigError(
                    f"edge {e}: nominal weight {w} plus upper bound {hi} must stay <= 0"
                )
        extra = set(self.nominal_weight) - seen
        if extra:
            raise ConfigError(f"nominal weights given for unknown edges {sorted(extra)}")

        if not _is_connected(n, self.edges):
            raise ConfigError("graph is not connected")


@dataclass(frozen=True)
class SampledLaplacian:
    """One sampled Laplacian-plus-gains matrix.

    ``matrix`` is the positive-definite N x N matrix whose negation is the
    state matrix of the sampled realization.  ``seed_trace`` records the
    derived sub-seed so a sample can be reproduced in isolation.
    """

    matrix: np.ndarray
    sample_index: int
    seed_trace: int

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigError(f"matrix must be square, got shape {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def build_network(config: Mapping) -> UncertainNetwork:
    """Build a validated :class:`UncertainNetwork` from a parsed config mapping.

    The expected schema is the ``network`` section of the run config file::

        n_vertices: 10
        edges: [[1, 2], [2, 3], ...]
        nominal_weight: -10.0          # scalar, or list aligned with edges
        uncertainty: [-0.5, 0.5]       # interval, or list of intervals
        self_loop_gain: 0.5            # scalar, or per-vertex list
        target_vertex: 5

    Raises:
        ConfigError: on any structural problem (disconnected graph, duplicate
            or conflicting edges, non-positive gains, out-of-range target,
            unbounded or sign-flipping uncertainty intervals).
    """

    try:
        n = int(config["n_vertices"])
        raw_edges = list(config["edges"])
        target = int(config["target_vertex"])
    except KeyError as exc:
        raise ConfigError(f"missing required network key: {exc}") from None

    edges: list[Edge] = []
    order: list[int] = []  # position of each canonical edge in the raw list
    for pos, pair in enumerate(raw_edges):
        if len(pair) != 2:
            raise ConfigError(f"edge entry {pair!r} must be a pair")
        i, j = int(pair[0]), int(pair[1])
        if i == j:
            raise ConfigError(f"self-loop edge ({i}, {j}) is not allowed")
        e = (min(i, j), max(i, j))
        if e in edges:
            raise ConfigError(f"duplicate edge {e} in config")
        edges.append(e)
        order.append(pos)

    weights_raw = config.get("nominal_weight", -1.0)
    if isinstance(weights_raw, (int, float)):
        weights = {e: float(weights_raw) for e in edges}
    else:
        if len(weights_raw) != len(edges):
            raise ConfigError("per-edge nominal_weight list does not match edges")
        weights = {e: float(weights_raw[order[k]]) for k, e in enumerate(edges)}

    unc_raw = config.get("uncertainty", [0.0, 0.0])
    if len(unc_raw) == 2 and isinstance(unc_raw[0], (int, float)):
        bounds = {e: (float(unc_raw[0]), float(unc_raw[1])) for e in edges}
    else:
        if len(unc_raw) != len(edges):
            raise ConfigError("per-edge uncertainty list does not match edges")
        bounds = {
            e: (float(unc_raw[order[k]][0]), float(unc_raw[order[k]][1]))
            for k, e in enumerate(edges)
        }

    gain_raw = config.get("self_loop_gain", 1.0)
    if isinstance(gain_raw, (int, float)):
        gains = np.full(n, float(gain_raw))
    else:
        gains = np.asarray([float(g) for g in gain_raw], dtype=float)

    canon = tuple(sorted(edges))
    return UncertainNetwork(
        n_vertices=n,
        edges=canon,
        nominal_weight=weights,
        uncertainty_bound=bounds,
        self_loop_gains=gains,
        target_vertex=target,
    )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _derive_subseed(master_seed: int, index: int) -> int:
    """Stable 64-bit sub-seed for sample ``index`` under ``master_seed``."""
    digest = hashlib.sha256(f"{master_seed}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def _assemble(net: UncertainNetwork, deltas: Mapping[Edge, float]) -> np.ndarray:
    """Laplacian-plus-gains matrix for given per-edge perturbations."""
    n = net.n_vertices
    mat = np.zeros((n, n))
    for e in net.edges:
        i, j = e[0] - 1, e[1] - 1
        w = net.nominal_weight[e] + deltas.get(e, 0.0)
        mat[i, j] = w
        mat[j, i] = w
        mat[i, i] -= w
        mat[j, j] -= w
    mat[np.diag_indices(n)] += net.self_loop_gains
    return mat

def sample_laplacian(
    net: UncertainNetwork,
    rng_seed: int,
    index: int,
    edge_sampler: Callable[[np.random.Generator, float, float], float] | None = None,
) -> SampledLaplacian:
    """Draw one Laplacian realization.

    Per-edge perturbations are independent and uniform on the edge's interval
    (``edge_sampler`` may override the law, still driven by the derived
    generator).  The sub-seed is a stable hash of ``(rng_seed, index)``, so a
    sample is a pure function of those two values: reordering, parallelism or
    re-running cannot change it.

    Args:
        net: the uncertain network.
        rng_seed: master seed of the sampling run.
        index: 1-based sample index.
        edge_sampler: optional override drawing one perturbation from
            ``(generator, lo, hi)``.

    Returns:
        The sampled matrix, tagged with ``index`` and the derived sub-seed.
    """

    if index < 1:
        raise ConfigError(f"sample index must be >= 1, got {index}")
    sub = _derive_subseed(rng_seed, index)
    rng = np.random.default_rng(sub)
    deltas: dict[Edge, float] = {}
    for e in net.edges:  # canonical order fixes the draw sequence
        lo, hi = net.uncertainty_bound[e]
        if edge_sampler is not None:
            d = float(edge_sampler(rng, lo, hi))
        elif lo == hi:
            d = lo
        else:
            d = float(rng.uniform(lo, hi))
        if not lo <= d <= hi:
            raise ConfigError(f"sampler returned {d} outside [{lo}, {hi}] for edge {e}")
        deltas[e] = d
    return SampledLaplacian(matrix=_assemble(net, deltas), sample_index=index, seed_trace=sub)


def nominal_laplacian(net: UncertainNetwork) -> SampledLaplacian:
    """The zero-perturbation realization (sample index 0)."""
    return SampledLaplacian(matrix=_assemble(net, {}), sample_index=0, seed_trace=0)


# ---------------------------------------------------------------------------
# topology helpers
# ---------------------------------------------------------------------------


def neighbors(net: UncertainNetwork) -> dict[int, tuple[int, ...]]:
    """Adjacency map over 1-based vertex labels."""
    adj: dict[int, list[int]] = {v: [] for v in range(1, net.n_vertices + 1)}
    for i, j in net.edges:
        adj[i].append(j)
        adj[j].append(i)
    return {v: tuple(sorted(nb)) for v, nb in adj.items()}


def graph_distances(net: UncertainNetwork, source: int) -> dict[int, int]:
    """Hop distances from ``source`` to every vertex (BFS)."""
    adj = neighbors(net)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def with_shifted_gains(net: UncertainNetwork, shift: float) -> UncertainNetwork:
    """Copy of ``net`` with every self-loop gain increased by ``shift``."""
    return replace(net, self_loop_gains=np.asarray(net.self_loop_gains) + shift)


def _is_connected(n: int, edges: Iterable[Edge]) -> bool:
    adj: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {1}
    queue = deque([1])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == n
