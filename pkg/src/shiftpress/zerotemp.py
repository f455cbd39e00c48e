"""Zero-temperature limits and ergodic optimization.

Sweeping ``t -> P(t*phi)/t`` drives the equilibrium states of ``t*phi``
toward measures maximizing ``integral(phi)``; a brute-force enumeration of
periodic orbits provides the independent maximizing oracle the sweep is
compared against.  The oracle value is a certified lower bound on the true
maximum (it may miss maximizers of period beyond its horizon), so a sweep
that beats it flags "oracle horizon insufficient" rather than failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OverflowGuard
from .measures import CylinderMarginal, LocallyConstantPotential, integrate, ks_entropy
from .equilibrium import gibbs_state, scale_potential
from .pressure import matrix_pressure
from .symbolic import DEFAULT_WORD_CAP, SftSystem, Word, word_matrix

#: largest exponent magnitude fed to exp() before renormalization tricks stop helping
_EXP_GUARD = 700.0


# ---------------------------------------------------------------------------
# Periodic-orbit oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaximizingOracle:
    """Best ergodic average over periodic orbits up to ``max_period``.

    ``witness_orbit`` is the lexicographically smallest primitive witness;
    ``witnesses`` lists all primitive tied maximizers (tie tolerance 1e-12).
    The value is a certified lower bound on ``max over invariant measures of
    integral(phi)``.
    """

    max_average: float
    witness_orbit: Word
    period: int
    max_period: int
    witnesses: tuple[Word, ...] = ()


def _cyclic_window_sums(sys: SftSystem, phi: LocallyConstantPotential,
                        words: np.ndarray) -> np.ndarray:
    """Cyclic ergodic sums of ``phi`` over each candidate orbit word."""
    k = phi.depth
    p = words.shape[1]
    if k == 1:
        return phi.values[words].sum(axis=1)
    ext = np.hstack([words, words[:, : k - 1]])
    m = sys.alphabet_size
    powers = m ** np.arange(k - 1, -1, -1)
    table = np.full(m**k, -np.inf)
    table[phi.words @ powers] = phi.values
    total = np.zeros(words.shape[0])
    for i in range(p):
        total += table[ext[:, i:i + k] @ powers]
    return total


def _is_primitive(word: tuple) -> bool:
    p = len(word)
    for d in range(1, p):
        if p % d == 0 and word == word[d:] + word[:d]:
            return False
    return True


def _canonical_rotation(word: tuple) -> tuple:
    return min(word[i:] + word[:i] for i in range(len(word)))


def periodic_orbit_oracle(sys: SftSystem, phi: LocallyConstantPotential,
                          max_period: int, cap: int = DEFAULT_WORD_CAP,
                          tie_tol: float = 1e-12) -> MaximizingOracle:
    """Enumerate all cyclically admissible words of period <= ``max_period``
    and maximize the cyclic Birkhoff average of ``phi``."""
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    best = -np.inf
    candidates: list[tuple[float, tuple]] = []
    for p in range(1, max_period + 1):
        words = word_matrix(sys, p, cap=cap)
        cyclic = sys.transition[words[:, -1], words[:, 0]].astype(bool)
        if not cyclic.any():
            continue
        words = words[cyclic]
        averages = _cyclic_window_sums(sys, phi, words) / p
        top = float(averages.max())
        best = max(best, top)
        keep = np.flatnonzero(averages >= top - tie_tol)
        for idx in keep:
            word = tuple(int(s) for s in words[idx])
            candidates.append((float(averages[idx]), word))
    witnesses = []
    seen = set()
    for avg, word in candidates:
        if avg < best - tie_tol or not _is_primitive(word):
            continue
        canon = _canonical_rotation(word)
        if canon not in seen:
            seen.add(canon)
            witnesses.append(canon)
    witnesses.sort(key=lambda w: (len(w), w))
    witness = witnesses[0]
    return MaximizingOracle(max_average=float(best), witness_orbit=witness,
                            period=len(witness), max_period=max_period,
                            witnesses=tuple(witnesses))


# ---------------------------------------------------------------------------
# Temperature sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SweepRow:
    t: float
    pressure: float
    pressure_over_t: float
    phi_integral: float
    entropy: float
    marginal: CylinderMarginal = field(repr=False)


@dataclass(frozen=True, eq=False)
class TemperatureSweep:
    """Rows of ``(t, P(t phi), P(t phi)/t, integral(phi), entropy)``.

    Validated at construction: ``P(t phi)/t`` is nonincreasing and
    ``integral(phi) d mu_t`` nondecreasing along the grid (up to 1e-10),
    which is what convexity of ``t -> P(t phi)`` demands when ``P(0) >= 0``.
    """

    t_grid: tuple[float, ...]
    rows: tuple[SweepRow, ...]

    def __post_init__(self):
        over_t = [r.pressure_over_t for r in self.rows]
        if any(b > a + 1e-10 for a, b in zip(over_t, over_t[1:])):
            raise ValueError("P(t phi)/t failed to be nonincreasing")
        integrals = [r.phi_integral for r in self.rows]
        if any(b < a - 1e-10 for a, b in zip(integrals, integrals[1:])):
            raise ValueError("integral(phi) d mu_t failed to be nondecreasing")

    def to_csv(self) -> str:
        lines = ["t,pressure,pressure_over_t,phi_integral,entropy"]
        for r in self.rows:
            lines.append(f"{r.t:.12g},{r.pressure:.12g},{r.pressure_over_t:.12g},"
                         f"{r.phi_integral:.12g},{r.entropy:.12g}")
        return "\n".join(lines) + "\n"


def default_t_grid(t_max: float = 50.0, ratio: float = 1.3, t_min: float = 1.0):
    """Geometric grid from ``t_min`` with the given ratio, ending at ``t_max``."""
    ts = [t_min]
    while ts[-1] * ratio < t_max:
        ts.append(ts[-1] * ratio)
    if ts[-1] < t_max:
        ts.append(t_max)
    return tuple(ts)


def temperature_sweep(sys: SftSystem, phi: LocallyConstantPotential,
                      t_grid=None, depth: int = 1) -> TemperatureSweep:
    """Equilibrium data of ``t*phi`` along an increasing grid of ``t``.

    The weighted Perron solve renormalizes by ``exp(-t max phi)`` internally
    (exact by translation invariance), so the only hard limit is the double
    exponent range, guarded at ``t * ||phi||_inf > 700``.
    """
    if t_grid is None:
        t_grid = default_t_grid()
    ts = tuple(float(t) for t in t_grid)
    if not ts or any(t <= 0 for t in ts) or list(ts) != sorted(ts):
        raise ValueError("t_grid must be positive and increasing")
    if ts[-1] > 500:
        raise ValueError("t_max must stay <= 500")
    sup_norm = float(np.abs(phi.values).max())
    if ts[-1] * sup_norm > _EXP_GUARD:
        raise OverflowGuard(
            f"t*||phi|| = {ts[-1] * sup_norm:.3g} exceeds the exponent range {_EXP_GUARD}")
    rows = []
    for t in ts:
        state = gibbs_state(sys, scale_potential(phi, t))
        pressure = state.log_lambda
        phi_int = state.integrate_potential(phi)
        rows.append(SweepRow(t=t, pressure=pressure, pressure_over_t=pressure / t,
                             phi_integral=phi_int, entropy=state.entropy(),
                             marginal=state.cylinder_marginal(depth)))
    return TemperatureSweep(t_grid=ts, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Accumulation diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AccumulationReport:
    """Comparison of the sweep tail against the periodic-orbit oracle.

    (a) the final ``integral(phi) d mu_t`` against the oracle maximum;
    (b) entropy of the late states confined to ``[0, h_top]`` (every
        periodic maximizer has entropy 0, the limit selects the largest);
    (c) Cauchy behavior of the entropy along the grid tail.
    """

    integral_gap: float
    integral_passed: bool
    oracle_horizon_insufficient: bool
    entropy_bounds_passed: bool
    late_entropy: float
    h_top: float
    cauchy_diffs: tuple[float, ...]
    cauchy_passed: bool

    @property
    def passed(self) -> bool:
        return (self.integral_passed and self.entropy_bounds_passed
                and self.cauchy_passed)


def accumulation_diagnostics(sweep: TemperatureSweep, oracle: MaximizingOracle,
                             tol: float = 1e-6) -> AccumulationReport:
    sys = sweep.rows[0].marginal.system
    from .measures import constant_potential
    h_top = matrix_pressure(sys, constant_potential(sys, 0.0)).log_lambda
    last = sweep.rows[-1]
    gap = abs(last.phi_integral - oracle.max_average)
    horizon_insufficient = last.phi_integral > oracle.max_average + 1e-9
    integral_passed = gap <= tol or horizon_insufficient
    tail = [r.entropy for r in sweep.rows[-5:]]
    entropy_ok = all(-1e-9 <= h <= h_top + 1e-9 for h in tail)
    diffs = tuple(abs(b - a) for a, b in zip(tail, tail[1:]))
    cauchy_ok = all(d2 <= d1 + 1e-12 for d1, d2 in zip(diffs, diffs[1:]))
    return AccumulationReport(integral_gap=float(gap),
                              integral_passed=bool(integral_passed),
                              oracle_horizon_insufficient=bool(horizon_insufficient),
                              entropy_bounds_passed=bool(entropy_ok),
                              late_entropy=float(last.entropy), h_top=float(h_top),
                              cauchy_diffs=diffs, cauchy_passed=bool(cauchy_ok))
