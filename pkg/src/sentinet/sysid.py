"""Structural analysis of single-attack, single-output channels.

For a sampled network realization the state matrix is ``A = -(L + diag(gains))``
and each analysed channel is the SISO triple ``(A, e_a, e_v)`` for attack
vertex ``a`` and output vertex ``v``.  Whether a stealthy attacker can cause
unbounded damage while staying hidden from a monitor reduces to two structural
facts about these channels: the relative-degree ordering between monitor and
target, and the stability of the monitor channel's finite invariant zeros.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from sentinet.netgraph import ConfigError, SampledLaplacian, UncertainNetwork

# Markov parameters / numerator coefficients below this relative size count as
# structural zeros; real parts at or above the threshold count as unstable.
COEFF_ZERO_RTOL = 1e-9
UNSTABLE_REAL_THRESHOLD = -1e-9


class DecoupledChannelError(ArithmeticError):
    """The requested channel has an identically zero transfer function."""


class Verdict(Enum):
    """Outcome of the structural feasibility test for an (attack, monitor) pair."""

    FEASIBLE = "Feasible"
    INFEASIBLE_RELATIVE_DEGREE = "InfeasibleRelativeDegree"
    INFEASIBLE_UNSTABLE_ZERO = "InfeasibleUnstableZero"


@dataclass(frozen=True)
class SystemRealization:
    """State matrix plus the attack / target / monitor vertex selection."""

    a_matrix: np.ndarray
    attack_vertex: int
    target_vertex: int
    monitor_vertex: int

    def __post_init__(self) -> None:
        a = np.array(self.a_matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError(f"state matrix must be square, got {a.shape}")
        n = a.shape[0]
        for name in ("attack_vertex", "target_vertex", "monitor_vertex"):
            v = getattr(self, name)
            if not 1 <= v <= n:
                raise ConfigError(f"{name} {v} out of range 1..{n}")
        if self.attack_vertex == self.target_vertex:
            raise ConfigError("attack vertex must differ from the target vertex")
        if self.monitor_vertex == self.target_vertex:
            raise ConfigError("monitor vertex must differ from the target vertex")
        a.flags.writeable = False
        object.__setattr__(self, "a_matrix", a)

    @property
    def n(self) -> int:
        return self.a_matrix.shape[0]

    def input_vector(self) -> np.ndarray:
        return _unit(self.n, self.attack_vertex)

    def output_vector(self, channel: str) -> np.ndarray:
        return _unit(self.n, self._output_vertex(channel))

    def _output_vertex(self, channel: str) -> int:
        if channel == "target":
            return self.target_vertex
        if channel == "monitor":
            return self.monitor_vertex
        raise ValueError(f"channel must be 'target' or 'monitor', got {channel!r}")


def realization(
    sample: SampledLaplacian, attack: int, monitor: int, target: int
) -> SystemRealization:
    """Wrap a sampled Laplacian as the realization attacked at ``attack``."""
    return SystemRealization(
        a_matrix=-np.asarray(sample.matrix),
        attack_vertex=attack,
        target_vertex=target,
        monitor_vertex=monitor,
    )


@dataclass(frozen=True)
class ZeroReport:
    """Invariant zeros of one channel.

    ``finite_zeros`` are the finite generalized eigenvalues of the channel
    pencil; ``infinite_zero_count`` is the degree deficit of the numerator
    against the characteristic polynomial, which equals the channel's
    relative degree.
    """

    finite_zeros: tuple[complex, ...]
    infinite_zero_count: int
    has_unstable_finite_zero: bool
    max_real_part: float


# ---------------------------------------------------------------------------
# relative degree
# ---------------------------------------------------------------------------


def relative_degree(sys: SystemRealization, channel: str = "monitor") -> int:
    """Smallest r >= 1 with a nonzero r-th Markov parameter ``c A^(r-1) b``.

    The zero test is relative: ``|c A^k b| <= COEFF_ZERO_RTOL * max(1, |A^k b|)``
    counts as zero, since raw Markov parameters grow with powers of ``A``.
    """

    a = sys.a_matrix
    b = sys.input_vector()
    c = sys.output_vector(channel)
    w = b
    for k in range(sys.n):
        val = float(c @ w)
        scale = max(1.0, float(np.linalg.norm(w)))
        if abs(val) > COEFF_ZERO_RTOL * scale:
            return k + 1
        w = a @ w
    raise DecoupledChannelError(
        f"channel ({sys.attack_vertex} -> {sys._output_vertex(channel)}) is identically zero"
    )


# ---------------------------------------------------------------------------
# invariant zeros
# ---------------------------------------------------------------------------


def invariant_zeros(sys: SystemRealization, channel: str = "monitor") -> ZeroReport:
    """Finite and infinite invariant zeros of the requested channel.

    The channel matrix ``[[sI - A, -b], [c, 0]]`` loses rank exactly at the
    zeros, so the finite zeros are the finite generalized eigenvalues of the
    pencil ``(F, G)`` with ``F = [[A, b], [c, 0]]`` and ``G = diag(I, 0)``;
    the QZ iteration behind :func:`scipy.linalg.eig` computes them without
    forming the badly conditioned numerator coefficients.  The pencil is
    regular because the channel is not identically zero, and it has exactly
    ``n - r`` finite eigenvalues where ``r`` is the relative degree, so the
    ``n - r`` most-finite homogeneous pairs are taken.  For these state-space
    triples with unit input and output vectors the invariant zeros coincide
    with the transmission zeros.
    """

    r = relative_degree(sys, channel)  # raises on a decoupled channel
    n = sys.n
    n_finite = n - r
    if n_finite == 0:
        ordered: tuple[complex, ...] = ()
    else:
        f = np.zeros((n + 1, n + 1))
        f[:n, :n] = sys.a_matrix
        f[:n, n] = sys.input_vector()
        f[n, :n] = sys.output_vector(channel)
        g = np.zeros((n + 1, n + 1))
        g[:n, :n] = np.eye(n)
        alpha, beta = scipy.linalg.eig(f, g, right=False, homogeneous_eigvals=True)
        finiteness = np.abs(beta) / (np.abs(alpha) + np.abs(beta))
        keep = np.argsort(finiteness)[::-1][:n_finite]
        roots = alpha[keep] / beta[keep]
        ordered = tuple(sorted((complex(z) for z in roots), key=lambda z: (z.real, z.imag)))
    max_re = max((z.real for z in ordered), default=float("-inf"))
    return ZeroReport(
        finite_zeros=ordered,
        infinite_zero_count=r,
        has_unstable_finite_zero=bool(max_re >= UNSTABLE_REAL_THRESHOLD),
        max_real_part=max_re,
    )


# ---------------------------------------------------------------------------
# stabilising gain shift
# ---------------------------------------------------------------------------


def design_gain_shift(
    net: UncertainNetwork,
    samples: Sequence[SampledLaplacian],
    pairs: Iterable[tuple[int, int]] | None = None,
    margin: float = 1e-6,
) -> float:
    """Smallest uniform self-loop gain increase that stabilises monitor zeros.

    Adding ``shift`` to every self-loop gain moves every invariant zero of
    every channel left by exactly ``shift`` (the channel pencil changes by
    ``shift * I``).  So a shift just above the worst zero real part over all
    supplied samples and candidate (attack, monitor) pairs clears the unstable
    half-plane; the returned value is re-verified on the shifted samples.

    Returns 0.0 when every zero is already strictly stable.
    """

    if pairs is None:
        tau = net.target_vertex
        labels = [v for v in range(1, net.n_vertices + 1) if v != tau]
        pairs = [(a, m) for a, m in itertools.product(labels, labels)]
    pairs = list(pairs)

    worst = float("-inf")
    for sample in samples:
        for attack, monitor in pairs:
            sys = realization(sample, attack=attack, monitor=monitor, target=net.target_vertex)
            report = invariant_zeros(sys, "monitor")
            worst = max(worst, report.max_real_part)

    if worst < -abs(UNSTABLE_REAL_THRESHOLD) * 10:
        return 0.0

    shift = worst + margin
    for _ in range(4):
        ok = True
        for sample in samples:
            shifted = SampledLaplacian(
                matrix=np.asarray(sample.matrix) + shift * np.eye(net.n_vertices),
                sample_index=sample.sample_index,
                seed_trace=sample.seed_trace,
            )
            for attack, monitor in pairs:
                sys = realization(shifted, attack=attack, monitor=monitor, target=net.target_vertex)
                if invariant_zeros(sys, "monitor").has_unstable_finite_zero:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return shift
        shift = worst + (shift - worst) * 10.0
    raise ArithmeticError("could not verify a stabilising gain shift")


# ---------------------------------------------------------------------------
# feasibility gate
# ---------------------------------------------------------------------------


def feasibility_verdict(sys: SystemRealization) -> Verdict:
    """Structural test for bounded worst-case impact of a stealthy attack.

    The impact stays bounded exactly when the monitor channel reacts at least
    as fast as the target channel (relative degree ordering) and the monitor
    channel has no finite zero in the closed right half-plane; those zeros are
    directions the attacker can excite invisibly.
    """

    r_monitor = relative_degree(sys, "monitor")
    r_target = relative_degree(sys, "target")
    if r_monitor > r_target:
        return Verdict.INFEASIBLE_RELATIVE_DEGREE
    if invariant_zeros(sys, "monitor").has_unstable_finite_zero:
        return Verdict.INFEASIBLE_UNSTABLE_ZERO
    return Verdict.FEASIBLE


def _unit(n: int, vertex: int) -> np.ndarray:
    e = np.zeros(n)
    e[vertex - 1] = 1.0
    return e
