"""Equilibrium states as Gibbs-Markov measures, and tangency/differentiability probes.

The equilibrium state of a locally constant potential on an irreducible SFT
is the Markov measure built from the Perron data of the weighted transition
matrix: ``stochastic[i][j] = transition[i][j] exp(phi(i)) r[j] / (lambda
r[i])`` with stationary row proportional to ``left * right``.  Tangency of
that measure to the pressure functional, and the Gateaux/Frechet behavior of
the pressure, are checked by direct sampling of directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure
from .measures import (
    CylinderMarginal,
    LocallyConstantPotential,
    MarkovMeasure,
    integrate,
    ks_entropy,
    marginal,
    marginal_distance,
)
from .pressure import (
    matrix_pressure,
    require_irreducible,
    weighted_perron,
)
from .symbolic import SftSystem, higher_block, word_matrix


# ---------------------------------------------------------------------------
# Gibbs states
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GibbsState:
    """Equilibrium state of a locally constant potential.

    For depth >= 2 the measure lives on the higher-block recoding (symbols =
    admissible depth-k words, in lexicographic order); ``word_map`` translates
    block symbols back to words.  ``cylinder_marginal`` always projects onto
    cylinders of the original system.
    """

    system: SftSystem
    measure: MarkovMeasure
    source_potential: LocallyConstantPotential
    log_lambda: float
    word_map: dict | None = field(default=None, repr=False)

    @property
    def depth(self) -> int:
        return self.source_potential.depth

    def phi_integral(self) -> float:
        """Integral of the source potential against this state."""
        if self.depth == 1:
            return integrate(self.measure, self.source_potential)
        return float(self.measure.stationary @ self.source_potential.values)

    def entropy(self) -> float:
        """KS entropy (recoding preserves it)."""
        return ks_entropy(self.measure)

    def cylinder_marginal(self, depth: int) -> CylinderMarginal:
        """Depth-``d`` cylinder marginal on the original system."""
        k = self.depth
        if k == 1:
            return marginal(self.measure, depth)
        sys = self.system
        words = word_matrix(sys, depth)
        block_index = {w: s for s, w in self.word_map.items()}
        pi = self.measure.stationary
        p = self.measure.stochastic
        weights = np.zeros(words.shape[0])
        if depth <= k:
            for s, w in self.word_map.items():
                weights_idx = w[:depth]
                # accumulate block stationary mass onto the word prefix
                row = _row_index(words, weights_idx)
                weights[row] += pi[s]
        else:
            for i, row in enumerate(words):
                w = tuple(int(x) for x in row)
                val = pi[block_index[w[:k]]]
                for j in range(depth - k):
                    val *= p[block_index[w[j:j + k]], block_index[w[j + 1:j + 1 + k]]]
                weights[i] = val
        return CylinderMarginal(sys, depth, weights)

    def integrate_potential(self, psi: LocallyConstantPotential) -> float:
        """Pairing of an arbitrary locally constant potential with this state."""
        if self.depth == 1:
            return integrate(self.measure, psi)
        return float(self.cylinder_marginal(psi.depth).weights @ psi.values)


def _row_index(words: np.ndarray, target) -> int:
    arr = np.asarray(target, dtype=words.dtype)
    hits = np.flatnonzero((words == arr).all(axis=1))
    return int(hits[0])


def gibbs_state(sys: SftSystem, phi: LocallyConstantPotential) -> GibbsState:
    """The Gibbs-Markov equilibrium state of ``phi``.

    Uniqueness holds at the Markov level because the Perron root of an
    irreducible matrix is simple.  The variational identity
    ``entropy + integral(phi) = log lambda`` is verified to 1e-9 before the
    state is returned.
    """
    require_irreducible(sys)
    if phi.system != sys:
        raise ValueError("potential belongs to a different system")
    if phi.depth == 1:
        transition = sys.transition.astype(float)
        base_sys, word_map = sys, None
    else:
        recoded, word_map = higher_block(sys, phi.depth)
        transition = recoded.transition.astype(float)
        base_sys = recoded
    data = weighted_perron(transition, phi.values)
    r = data.right_vec
    lam_scaled = transition * np.exp(phi.values - phi.values.max())[:, None] @ r
    # stochastic rows: L[i][j] r[j] / (lambda r[i]); renormalize away the
    # last ulp so the Markov validity checks are exact
    weights = transition * np.exp(phi.values - phi.values.max())[:, None] * r[None, :]
    stochastic = weights / lam_scaled[:, None]
    stochastic /= stochastic.sum(axis=1, keepdims=True)
    stationary = data.left_vec * data.right_vec
    stationary = stationary / stationary.sum()
    measure = MarkovMeasure(base_sys, stochastic, stationary,
                            label=f"gibbs({phi.depth})")
    state = GibbsState(system=sys, measure=measure, source_potential=phi,
                       log_lambda=data.log_lambda, word_map=word_map)
    defect = abs(state.entropy() + state.phi_integral() - data.log_lambda)
    if defect > 1e-9:
        raise ConvergenceFailure(data.iterations,
                                 f"variational identity defect {defect:.3e}")
    return state


def parry_measure(sys: SftSystem) -> MarkovMeasure:
    """Maximal-entropy (Parry) measure: the Gibbs state of the zero potential."""
    from .measures import constant_potential
    return gibbs_state(sys, constant_potential(sys, 0.0)).measure


# ---------------------------------------------------------------------------
# Potential arithmetic
# ---------------------------------------------------------------------------

def combine_potentials(phi: LocallyConstantPotential, psi: LocallyConstantPotential,
                       coeff: float = 1.0) -> LocallyConstantPotential:
    """The potential ``phi + coeff * psi`` at depth ``max(k_phi, k_psi)``."""
    if phi.system != psi.system:
        raise ValueError("potentials live on different systems")
    sys = phi.system
    k = max(phi.depth, psi.depth)
    if phi.depth == psi.depth:
        return LocallyConstantPotential(sys, k, phi.values + coeff * psi.values)
    words = word_matrix(sys, k)
    values = np.empty(words.shape[0])
    for i, row in enumerate(words):
        w = tuple(int(x) for x in row)
        values[i] = phi.value_of(w[:phi.depth]) + coeff * psi.value_of(w[:psi.depth])
    return LocallyConstantPotential(sys, k, values)


def scale_potential(phi: LocallyConstantPotential, t: float) -> LocallyConstantPotential:
    return LocallyConstantPotential(phi.system, phi.depth, t * phi.values)


# ---------------------------------------------------------------------------
# Tangency (subdifferential) checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TangencyRow:
    psi_id: str
    lhs: float   # P(phi + psi) - P(phi)
    rhs: float   # integral of psi against the Gibbs state of phi
    slack: float


@dataclass(frozen=True)
class TangencyReport:
    max_violation: float
    directions_tested: int
    per_direction: tuple[TangencyRow, ...]

    @property
    def passed(self) -> bool:
        return self.max_violation <= 1e-9

    def to_csv(self) -> str:
        lines = ["psi_id,lhs,rhs,slack"]
        for row in self.per_direction:
            lines.append(f"{row.psi_id},{row.lhs:.12g},{row.rhs:.12g},{row.slack:.12g}")
        return "\n".join(lines) + "\n"


def tangency_check(sys: SftSystem, phi: LocallyConstantPotential,
                   directions) -> TangencyReport:
    """Verify ``P(phi + psi) - P(phi) >= integral(psi) d(gibbs)`` in every
    direction, both signs.  The worst negative slack is the violation."""
    directions = list(directions)
    if not directions:
        raise ValueError("directions must be nonempty")
    state = gibbs_state(sys, phi)
    p0 = state.log_lambda
    rows = []
    for idx, psi in enumerate(directions):
        pairing = state.integrate_potential(psi)
        for sign in (+1.0, -1.0):
            lhs = matrix_pressure(sys, combine_potentials(phi, psi, sign)).log_lambda - p0
            rhs = sign * pairing
            tag = f"psi{idx}" + ("+" if sign > 0 else "-")
            rows.append(TangencyRow(psi_id=tag, lhs=lhs, rhs=rhs, slack=lhs - rhs))
    max_violation = max(0.0, -min(r.slack for r in rows))
    return TangencyReport(max_violation=max_violation,
                          directions_tested=len(rows), per_direction=tuple(rows))


# ---------------------------------------------------------------------------
# Gateaux derivative
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateauxResult:
    derivative: float
    pairing: float          # integral of psi against the Gibbs state
    table: tuple            # (t, central difference) rows
    gap: float

    @property
    def passed(self) -> bool:
        return self.gap <= 1e-7


DEFAULT_T_GRID = (1e-2, 5e-3, 2.5e-3, 1.25e-3)


def gateaux_derivative(sys: SftSystem, phi: LocallyConstantPotential,
                       psi: LocallyConstantPotential,
                       t_grid=DEFAULT_T_GRID) -> GateauxResult:
    """Directional derivative of the pressure at ``phi`` along ``psi``.

    Central differences over ``t_grid`` with a second-order Richardson
    extrapolation from the two finest steps; on an irreducible SFT the result
    agrees with the Gibbs pairing (unique tangent functional regime).
    """
    ts = sorted(float(t) for t in t_grid)
    if ts[0] < 1e-7:
        raise ValueError("t_grid entries must stay >= 1e-7 (cancellation floor)")
    table = []
    for t in sorted(ts, reverse=True):
        up = matrix_pressure(sys, combine_potentials(phi, psi, t)).log_lambda
        dn = matrix_pressure(sys, combine_potentials(phi, psi, -t)).log_lambda
        table.append((t, (up - dn) / (2 * t)))
    if len(table) >= 2:
        (t1, d1), (t2, d2) = table[-2], table[-1]
        derivative = (t1 * t1 * d2 - t2 * t2 * d1) / (t1 * t1 - t2 * t2)
    else:
        derivative = table[-1][1]
    pairing = gibbs_state(sys, phi).integrate_potential(psi)
    return GateauxResult(derivative=float(derivative), pairing=float(pairing),
                         table=tuple(table), gap=abs(derivative - pairing))


# ---------------------------------------------------------------------------
# Frechet probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrechetReport:
    """Decay of the sup-remainder ``|P(phi+psi) - P(phi) - <psi, mu_phi>| /
    ||psi||`` as the radius shrinks, plus a fitted Lipschitz constant for the
    tangent-functional continuity ``dist(mu_{phi+psi}, mu_phi) <= C ||psi||``."""

    radii: tuple[float, ...]
    ratios: tuple[float, ...]
    decay_factors: tuple[float, ...]
    continuity_constant: float
    directions_tested: int
    seed: int


def sample_directions(sys: SftSystem, depth: int, n_random: int, rng):
    """Coordinate directions plus sup-normalized random directions."""
    dim = word_matrix(sys, depth).shape[0]
    dirs = []
    for i in range(dim):
        values = np.zeros(dim)
        values[i] = 1.0
        dirs.append(LocallyConstantPotential(sys, depth, values))
    for _ in range(n_random):
        v = rng.standard_normal(dim)
        v /= np.abs(v).max()
        dirs.append(LocallyConstantPotential(sys, depth, v))
    return dirs


def frechet_probe(sys: SftSystem, phi: LocallyConstantPotential,
                  radius_grid=(0.2, 0.1, 0.05, 0.025),
                  directions=None, n_random: int = 50, seed: int = 0,
                  marginal_depth: int = 2) -> FrechetReport:
    """Estimate the Frechet remainder decay of the pressure at ``phi``.

    On depth-k families over irreducible SFTs the pressure is analytic, so
    the sup-remainder ratio decays linearly in the radius (the report's
    ``decay_factors`` hover around 2 when radii halve), and the equilibrium
    marginal moves Lipschitz-continuously.
    """
    rng = np.random.default_rng(seed)
    if directions is None:
        directions = sample_directions(sys, phi.depth, n_random, rng)
    radii = tuple(sorted((float(r) for r in radius_grid), reverse=True))
    state = gibbs_state(sys, phi)
    p0 = state.log_lambda
    base_marg = state.cylinder_marginal(marginal_depth)
    ratios = []
    cont = 0.0
    for r in radii:
        worst = 0.0
        for psi in directions:
            scaled = combine_potentials(phi, psi, r)
            lhs = matrix_pressure(sys, scaled).log_lambda - p0
            rem = abs(lhs - r * state.integrate_potential(psi))
            worst = max(worst, rem / r)
            shifted_state = gibbs_state(sys, scaled)
            dist = marginal_distance(shifted_state.cylinder_marginal(marginal_depth),
                                     base_marg)
            norm = r * float(np.abs(psi.values).max())
            if norm > 0:
                cont = max(cont, dist / norm)
        ratios.append(worst)
    factors = tuple(ratios[i] / ratios[i + 1] if ratios[i + 1] > 0 else math.inf
                    for i in range(len(ratios) - 1))
    return FrechetReport(radii=radii, ratios=tuple(ratios), decay_factors=factors,
                         continuity_constant=float(cont),
                         directions_tested=len(directions), seed=seed)
