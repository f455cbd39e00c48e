"""Three pressure engines plus the pressure-function axiom suite.

* ``matrix_pressure`` — exact: log of the Perron root of the weighted
  transition matrix ``L[i][j] = transition[i][j] * exp(phi(i))`` (potential
  read at the *source* symbol; this convention is part of the CSV contract,
  the opposite one transposes the eigenvectors).
* ``separated_set_pressure`` — the finite-scale growth-rate estimator
  ``(1/n) log sum_w exp(S_n phi)`` over admissible words; independent of the
  matrix engine so the two can cross-check each other.
* ``transfer_operator_pressure`` — iterates the weighted transfer operator
  on cylinder brackets of a full-branch interval map, giving rigorous
  two-sided bounds on the log spectral radius.

Perron data is certified by Collatz-Wielandt ratio brackets: for any
entrywise positive ``v``, ``min_i (Lv)_i / v_i <= lambda <= max_i (Lv)_i /
v_i``.  The iteration refines ``v`` by shifted inverse steps, which keep the
iterate positive because the shift exceeds the spectral radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .errors import (
    ConvergenceFailure,
    DepthOverflow,
    NonFullBranch,
    NonMonotoneDerivative,
    NotIrreducible,
)
from .measures import LocallyConstantPotential, constant_potential, random_potential
from .symbolic import (
    DEFAULT_WORD_CAP,
    IntervalMapSystem,
    SftSystem,
    higher_block,
    word_matrix,
)

_CW_RTOL = 1e-13
_MAX_REFINE = 200


# ---------------------------------------------------------------------------
# Perron eigendata
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PerronData:
    """Certified Perron eigendata of a weighted transition matrix.

    ``log_lambda`` is the pressure value.  ``right_vec`` and ``left_vec``
    are strictly positive, normalized so that ``sum(right) = 1`` and
    ``left @ right = 1``.  ``residual`` is the max-norm of ``L r - lambda r``
    for the internally normalized matrix (weights rescaled so the largest
    potential value is 0), and is at most ~1e-12 at convergence.
    """

    log_lambda: float
    right_vec: np.ndarray = field(repr=False)
    left_vec: np.ndarray = field(repr=False)
    iterations: int
    residual: float


def require_irreducible(sys: SftSystem):
    """Raise NotIrreducible unless the transition graph is strongly connected."""
    n, _ = connected_components(csr_matrix(sys.transition), directed=True,
                                connection="strong")
    if n != 1:
        raise NotIrreducible(f"transition graph has {n} strongly connected components")


def _cw_bracket(L: np.ndarray, v: np.ndarray):
    Lv = L @ v
    ratios = Lv / v
    return float(ratios.min()), float(ratios.max()), Lv


def _positive(v: np.ndarray) -> np.ndarray:
    if v.sum() < 0:
        v = -v
    top = v.max()
    if top <= 0:
        return np.ones_like(v) / v.size
    v = np.maximum(v, top * 1e-290)
    return v / v.sum()


def _perron_vector(L: np.ndarray, rtol: float = _CW_RTOL):
    """Certified (lo, hi, v, iterations) with lo <= lambda <= hi.

    Warm-starts from the dense eigensolver, then refines with shifted
    inverse iterations; each iterate keeps a valid Collatz-Wielandt bracket.
    """
    m = L.shape[0]
    if m == 1:
        lam = float(L[0, 0])
        return lam, lam, np.ones(1), 0
    try:
        w, V = np.linalg.eig(L)
        v = _positive(np.real(V[:, int(np.argmax(w.real))]))
    except np.linalg.LinAlgError:
        v = np.ones(m) / m
    lo, hi, Lv = _cw_bracket(L, v)
    it = 0
    eye = np.eye(m)
    while hi - lo > rtol * max(hi, 1e-300) and it < _MAX_REFINE:
        it += 1
        s = hi * (1.0 + 1e-8)
        try:
            x = np.linalg.solve(s * eye - L, v)
        except np.linalg.LinAlgError:
            x = Lv  # plain power step as a fallback
        v = _positive(x)
        lo, hi, Lv = _cw_bracket(L, v)
    if hi - lo > rtol * max(hi, 1e-300):
        raise ConvergenceFailure(it, f"Perron bracket stalled at width {hi - lo:.3e}")
    return lo, hi, v, it


def perron_data(L: np.ndarray, rtol: float = _CW_RTOL) -> PerronData:
    """Certified Perron root and positive left/right vectors of ``L``."""
    lo_r, hi_r, right, it_r = _perron_vector(L, rtol)
    lo_l, hi_l, left, it_l = _perron_vector(L.T, rtol)
    lo = max(lo_r, lo_l)
    hi = min(hi_r, hi_l)
    if lo > hi:  # brackets disagree beyond tolerance; keep the wider story
        lo, hi = min(lo_r, lo_l), max(hi_r, hi_l)
    lam = 0.5 * (lo + hi)
    right = right / right.sum()
    left = left / (left @ right)
    residual = float(np.abs(L @ right - lam * right).max())
    return PerronData(log_lambda=math.log(lam), right_vec=right, left_vec=left,
                      iterations=it_r + it_l, residual=residual)


def _weighted_matrix(transition: np.ndarray, values: np.ndarray):
    """Row-weighted matrix with the largest weight normalized to 1.

    Returns ``(L, shift)`` with true matrix ``exp(shift) * L`` on the rows
    where values were shifted; pressure adds ``shift`` back.
    """
    shift = float(values.max())
    return transition * np.exp(values - shift)[:, None], shift


def weighted_perron(transition: np.ndarray, values: np.ndarray,
                    rtol: float = _CW_RTOL) -> PerronData:
    """PerronData of ``diag(exp(values)) @ transition`` with overflow-safe
    internal normalization."""
    L, shift = _weighted_matrix(np.asarray(transition, dtype=float),
                                np.asarray(values, dtype=float))
    data = perron_data(L, rtol)
    return PerronData(log_lambda=data.log_lambda + shift,
                      right_vec=data.right_vec, left_vec=data.left_vec,
                      iterations=data.iterations, residual=data.residual)


def _block_presentation(sys: SftSystem, phi: LocallyConstantPotential):
    """(transition, values) on which a depth-k potential is depth-1."""
    if phi.depth == 1:
        return sys.transition.astype(float), phi.values
    recoded, _ = higher_block(sys, phi.depth)
    return recoded.transition.astype(float), phi.values


def matrix_pressure(sys: SftSystem, phi: LocallyConstantPotential,
                    rtol: float = _CW_RTOL) -> PerronData:
    """Exact topological pressure of a locally constant potential.

    For depth >= 2 the system is recoded so the potential becomes depth-1;
    the admissible-word order of the recoding matches the potential table.
    """
    require_irreducible(sys)
    if phi.system != sys:
        raise ValueError("potential belongs to a different system")
    transition, values = _block_presentation(sys, phi)
    return weighted_perron(transition, values, rtol)


# ---------------------------------------------------------------------------
# Separated-set estimator
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PressureEstimate:
    """A finite-scale pressure estimate with a two-sided bracket.

    ``depth_sequence`` holds ``(n, value_n)`` pairs; ``bracket`` is the final
    (lower, upper) enclosure, and ``row_brackets`` the per-depth enclosures
    used to build it.
    """

    value: float
    depth_sequence: tuple
    bracket: tuple[float, float]
    row_brackets: tuple = ()

    def __post_init__(self):
        if not self.depth_sequence:
            raise ValueError("depth_sequence must be nonempty")
        lo, hi = self.bracket
        if not (lo <= self.value <= hi):
            raise ValueError(f"value {self.value} outside bracket [{lo}, {hi}]")

    def to_csv(self) -> str:
        lines = ["n,value_n,lower,upper"]
        brackets = self.row_brackets or tuple(self.bracket for _ in self.depth_sequence)
        for (n, val), (lo, hi) in zip(self.depth_sequence, brackets):
            lines.append(f"{n},{val:.12g},{lo:.12g},{hi:.12g}")
        return "\n".join(lines) + "\n"


def _window_codes(words: np.ndarray, phi: LocallyConstantPotential) -> np.ndarray:
    """Sum of potential values over all depth-k windows of each word row."""
    k = phi.depth
    n_win = words.shape[1] - k + 1
    m = phi.system.alphabet_size
    if m**k <= 10**7:
        table = np.full(m**k, np.nan)
        key = phi.words @ (m ** np.arange(k - 1, -1, -1))
        table[key] = phi.values
        total = np.zeros(words.shape[0])
        powers = m ** np.arange(k - 1, -1, -1)
        for i in range(n_win):
            total += table[words[:, i:i + k] @ powers]
        return total
    total = np.zeros(words.shape[0])
    for r, row in enumerate(words):
        total[r] = sum(phi.value_of(tuple(row[i:i + k])) for i in range(n_win))
    return total


def separated_set_pressure(sys: SftSystem, phi: LocallyConstantPotential,
                           n_max: int, cap: int = DEFAULT_WORD_CAP) -> PressureEstimate:
    """Growth rate of the weighted word sums ``P_n = sum_w exp(S_n phi)``.

    Under the cylinder metric a maximal separated set at scale 1 is one point
    per admissible ``n``-word, so ``value_n = (1/n) log P_n``.  Potentials of
    depth >= 2 use sup-weighting over the unseen tail symbols.  Every
    ``value_n`` is an upper bound on the limit (Fekete); the bracket pairs
    the best of them with the heuristic lower bound
    ``value_{n_max} - log(m)/n_max``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    k = phi.depth
    if phi.system != sys:
        raise ValueError("potential belongs to a different system")
    m = sys.alphabet_size
    rows = []
    for n in range(1, n_max + 1):
        ext = word_matrix(sys, n + k - 1, cap=cap)
        sums = _window_codes(ext, phi)
        if k == 1:
            per_prefix = sums
        else:
            # lexicographic rows make prefix groups contiguous
            prefix = ext[:, :n]
            change = np.any(prefix[1:] != prefix[:-1], axis=1)
            starts = np.concatenate(([0], np.flatnonzero(change) + 1))
            per_prefix = np.maximum.reduceat(sums, starts)
        rows.append((n, float(logsumexp(per_prefix)) / n))
    values = np.array([v for _, v in rows])
    upper = float(max(values.min(), values[-1]))
    lower = float(values[-1] - math.log(m) / n_max)
    running_min = np.minimum.accumulate(values)
    row_brackets = tuple((float(v - math.log(m) / n), float(max(running_min[i], v)))
                         for i, (n, v) in enumerate(rows))
    return PressureEstimate(value=float(values[-1]), depth_sequence=tuple(rows),
                            bracket=(lower, upper), row_brackets=row_brackets)


# ---------------------------------------------------------------------------
# Transfer-operator brackets for interval maps
# ---------------------------------------------------------------------------

MAX_CYLINDER_DEPTH = 24


def _check_expanding_full(imap: IntervalMapSystem):
    for b in imap.branches:
        if not b.full_branch:
            raise NonFullBranch(f"branch {b.family} on [{b.lo}, {b.hi}] is not full")
        image = (float(b.value(np.array(b.lo))), float(b.value(np.array(b.hi))))
        if abs(image[0]) > 1e-12 or abs(image[1] - 1.0) > 1e-12:
            raise NonFullBranch(
                f"branch {b.family} image [{image[0]:.2e}, {image[1]:.6f}] is not [0, 1]")
        if b.derivative_shape not in ("constant", "increasing", "decreasing"):
            raise NonMonotoneDerivative(f"branch {b.family} has no monotone derivative")


def cylinder_log_deriv_sums(imap: IntervalMapSystem, depth: int):
    """Per-depth brackets on ``sum_i log f'(f^i x)`` over depth-n cylinders.

    Returns a list of ``(smin, smax)`` array pairs for n = 1 .. depth, each
    of length ``branch_count**n``.  Built by pulling [0, 1] back through the
    inverse branches; the derivative at each level is bracketed by its values
    at the cylinder endpoints, which is valid because every branch has a
    monotone derivative.
    """
    if depth > MAX_CYLINDER_DEPTH:
        raise DepthOverflow(f"depth {depth} exceeds {MAX_CYLINDER_DEPTH}")
    _check_expanding_full(imap)
    lo = np.array([0.0])
    hi = np.array([1.0])
    smin = np.array([0.0])
    smax = np.array([0.0])
    out = []
    for _ in range(depth):
        new_lo, new_hi, new_smin, new_smax = [], [], [], []
        for b in imap.branches:
            jlo = b.inverse(lo)
            jhi = b.inverse(hi)
            d_lo = np.log(b.deriv(jlo))
            d_hi = np.log(b.deriv(jhi))
            new_lo.append(jlo)
            new_hi.append(jhi)
            new_smin.append(smin + np.minimum(d_lo, d_hi))
            new_smax.append(smax + np.maximum(d_lo, d_hi))
        lo = np.concatenate(new_lo)
        hi = np.concatenate(new_hi)
        smin = np.concatenate(new_smin)
        smax = np.concatenate(new_smax)
        out.append((smin, smax))
    return out


def _bracket_from_sums(smin: np.ndarray, smax: np.ndarray, t: float, n: int):
    """(lower, upper) on (1/n) log of the n-step operator sums at weight
    exponent t."""
    if t >= 0:
        lower = float(logsumexp(-t * smax)) / n
        upper = float(logsumexp(-t * smin)) / n
    else:
        lower = float(logsumexp(-t * smin)) / n
        upper = float(logsumexp(-t * smax)) / n
    return lower, upper


def transfer_operator_pressure(imap: IntervalMapSystem, weight_exponent: float,
                               grid_n: int) -> PressureEstimate:
    """Bracketed log spectral radius of the transfer operator with weight
    ``|f'|**(-t)``.

    The n-th iterate of the operator on the constant function 1 is a sum
    over inverse-branch cylinders; bounding each term by endpoint values of
    the monotone derivative gives rigorous lower/upper sums.  Per-depth
    brackets are intersected (each one is valid), so the reported sequence is
    nested by construction.
    """
    if grid_n < 1:
        raise ValueError("grid_n must be >= 1")
    t = float(weight_exponent)
    if t == 0.0:
        val = math.log(imap.branch_count)
        rows = tuple((n, val) for n in range(1, grid_n + 1))
        return PressureEstimate(value=val, depth_sequence=rows, bracket=(val, val),
                                row_brackets=tuple((val, val) for _ in rows))
    sums = cylinder_log_deriv_sums(imap, grid_n)
    rows = []
    row_brackets = []
    lo_run, hi_run = -np.inf, np.inf
    for n, (smin, smax) in enumerate(sums, start=1):
        lo, hi = _bracket_from_sums(smin, smax, t, n)
        lo_run = max(lo_run, lo)
        hi_run = min(hi_run, hi)
        if lo_run > hi_run:  # round-off guard; keep a consistent point bracket
            mid = 0.5 * (lo_run + hi_run)
            lo_run = hi_run = mid
        rows.append((n, 0.5 * (lo_run + hi_run)))
        row_brackets.append((lo_run, hi_run))
    return PressureEstimate(value=rows[-1][1], depth_sequence=tuple(rows),
                            bracket=row_brackets[-1], row_brackets=tuple(row_brackets))


# ---------------------------------------------------------------------------
# Axiom suite and coboundary invariance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AxiomCheck:
    axiom: str
    samples: int
    worst_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_violation <= self.tolerance


@dataclass(frozen=True)
class AxiomReport:
    """Worst violations of monotonicity, translation invariance, convexity
    and the Lipschitz bound over randomized potential samples."""

    checks: tuple[AxiomCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_csv(self) -> str:
        lines = ["axiom,samples,worst_violation,tolerance,pass"]
        for c in self.checks:
            lines.append(f"{c.axiom},{c.samples},{c.worst_violation:.12g},"
                         f"{c.tolerance:.12g},{int(c.passed)}")
        return "\n".join(lines) + "\n"


def matrix_engine(sys: SftSystem):
    """Pressure callable backed by the exact matrix engine.

    Returns ``phi -> (value, uncertainty)`` with solver-level uncertainty.
    """
    def engine(phi: LocallyConstantPotential):
        return matrix_pressure(sys, phi).log_lambda, 1e-12
    return engine


def separated_engine(sys: SftSystem, n_max: int):
    """Pressure callable backed by the separated-set estimator; the
    uncertainty is the bracket radius at ``n_max``."""
    def engine(phi: LocallyConstantPotential):
        est = separated_set_pressure(sys, phi, n_max)
        unc = max(est.value - est.bracket[0], est.bracket[1] - est.value)
        return est.value, unc
    return engine


def axiom_suite(engine, sys: SftSystem, depth: int = 1, n_samples: int = 200,
                seed: int = 0, tol: float = 1e-8, scale: float = 1.0) -> AxiomReport:
    """Randomized verification of the pressure-function axioms.

    Each sampled violation is reduced by the engine's reported uncertainty
    before comparison with ``tol``, so estimator engines are judged at their
    bracket width rather than at the exact-engine tolerance.
    """
    rng = np.random.default_rng(seed)
    worst = {"monotonicity": -np.inf, "translation": -np.inf,
             "convexity": -np.inf, "lipschitz": -np.inf}

    def shifted(phi, c):
        return LocallyConstantPotential(sys, phi.depth, phi.values + c)

    fixed_shifts = (-2.0, 0.5, 3.0)
    for i in range(n_samples):
        phi = random_potential(sys, depth, rng, scale=scale)
        g_phi, u_phi = engine(phi)

        c = fixed_shifts[i % 3] if i < 3 * len(fixed_shifts) else float(rng.uniform(-3, 3))
        g_shift, u_shift = engine(shifted(phi, c))
        worst["translation"] = max(worst["translation"],
                                   abs(g_shift - g_phi - c) - (u_phi + u_shift))

        bump = np.abs(rng.standard_normal(phi.values.size))
        psi = LocallyConstantPotential(sys, depth, phi.values + bump)
        g_psi, u_psi = engine(psi)
        worst["monotonicity"] = max(worst["monotonicity"],
                                    g_phi - g_psi - (u_phi + u_psi))

        chi = random_potential(sys, depth, rng, scale=scale)
        g_chi, u_chi = engine(chi)
        s = 0.5 if i % 2 == 0 else float(rng.uniform(0.05, 0.95))
        mix = LocallyConstantPotential(sys, depth, s * phi.values + (1 - s) * chi.values)
        g_mix, u_mix = engine(mix)
        worst["convexity"] = max(worst["convexity"],
                                 g_mix - s * g_phi - (1 - s) * g_chi
                                 - (u_mix + u_phi + u_chi))

        gap = float(np.abs(phi.values - chi.values).max())
        worst["lipschitz"] = max(worst["lipschitz"],
                                 abs(g_phi - g_chi) - gap - (u_phi + u_chi))

    checks = tuple(AxiomCheck(axiom=name, samples=n_samples,
                              worst_violation=float(v), tolerance=tol)
                   for name, v in worst.items())
    return AxiomReport(checks=checks)


@dataclass(frozen=True)
class CoboundaryReport:
    pressure_phi: float
    pressure_twisted: float
    difference: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.difference) <= self.tolerance


def coboundary_invariance_check(sys: SftSystem, phi: LocallyConstantPotential,
                                psi: LocallyConstantPotential,
                                tol: float = 1e-9) -> CoboundaryReport:
    """Pressure is unchanged by adding the coboundary ``psi o shift - psi``.

    The twisted potential is locally constant at depth
    ``max(phi.depth, psi.depth + 1)``, so both pressures come from the exact
    matrix engine.
    """
    k = max(phi.depth, psi.depth + 1)
    words = word_matrix(sys, k)
    kp, kq = phi.depth, psi.depth
    values = np.empty(words.shape[0])
    for i, row in enumerate(words):
        w = tuple(int(s) for s in row)
        values[i] = (phi.value_of(w[:kp]) + psi.value_of(w[1:1 + kq])
                     - psi.value_of(w[:kq]))
    twisted = LocallyConstantPotential(sys, k, values)
    p0 = matrix_pressure(sys, phi).log_lambda
    p1 = matrix_pressure(sys, twisted).log_lambda
    return CoboundaryReport(pressure_phi=p0, pressure_twisted=p1,
                            difference=p1 - p0, tolerance=tol)
