"""One-step linear cocycles over SFTs and their sub-additive thermodynamics.

A cocycle assigns one invertible matrix per alphabet symbol; along a word the
matrices multiply up (newest factor on the left).  The singular-value
potential with nonincreasing weights ``alpha`` is

    phi_alpha(w) = sum_i alpha_i log s_i(A_w),

computed here through exterior powers: by Abel summation it is a nonnegative
combination of ``log ||wedge^k A_w||``, and each of those is a *top* singular
value of a product of compound matrices, which stays numerically accurate at
any word length (individual small singular values of long products do not).

Pressure of the potential sequence is estimated by per-depth word sums whose
normalized logs are upper bounds decreasing to the limit (Fekete), and the
variational inequality of the sub-additive formalism is checked against exact
depth-limited approximants of the asymptotic integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import logsumexp

from .errors import SingularProduct
from .measures import MarkovMeasure, cylinder_weights, ks_entropy, require_irreducible_measure
from .symbolic import DEFAULT_WORD_CAP, SftSystem, word_matrix

_RENORM_CEIL = 1e100


# ---------------------------------------------------------------------------
# Cocycle data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CocycleSpec:
    """One invertible ``dimension x dimension`` matrix per alphabet symbol."""

    system: SftSystem
    generators: tuple = field(repr=False)
    dimension: int = 0
    condition_numbers: tuple[float, ...] = ()

    def __post_init__(self):
        gens = tuple(np.array(g, dtype=float) for g in self.generators)
        if len(gens) != self.system.alphabet_size:
            raise ValueError("need one generator per alphabet symbol")
        d = gens[0].shape[0]
        conds = []
        for g in gens:
            if g.shape != (d, d):
                raise ValueError("generators must share a square shape")
            if not np.isfinite(g).all():
                raise ValueError("generator entries must be finite")
            if abs(np.linalg.det(g)) <= 1e-12:
                raise ValueError("generators must be invertible (|det| > 1e-12)")
            conds.append(float(np.linalg.cond(g)))
            g.setflags(write=False)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "condition_numbers", tuple(conds))

    def compound_generators(self, k: int) -> tuple:
        """k-th exterior powers of the generators (cached per spec)."""
        cache = getattr(self, "_compounds", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_compounds", cache)
        if k not in cache:
            cache[k] = tuple(compound_matrix(g, k) for g in self.generators)
        return cache[k]


def build_cocycle(sys: SftSystem, generators) -> CocycleSpec:
    return CocycleSpec(system=sys, generators=tuple(generators))


@dataclass(frozen=True)
class SingularWeight:
    """Nonincreasing exponent vector for the singular-value potential."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(x) for x in self.alpha)
        if any(x < y - 1e-15 for x, y in zip(a, a[1:])):
            raise ValueError("alpha must be nonincreasing")
        object.__setattr__(self, "alpha", a)

    def abel_coefficients(self):
        """Pairs ``(k, alpha_k - alpha_{k+1})`` with nonzero coefficient;
        the potential is ``sum_k c_k log(s_1 ... s_k)``."""
        a = self.alpha + (0.0,)
        return [(k + 1, a[k] - a[k + 1]) for k in range(len(self.alpha))
                if abs(a[k] - a[k + 1]) > 0]


def compound_matrix(m: np.ndarray, k: int) -> np.ndarray:
    """k-th exterior power (matrix of k x k minors over sorted index sets)."""
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in 1..{d}")
    if k == 1:
        return m.copy()
    idx = list(combinations(range(d), k))
    out = np.empty((len(idx), len(idx)))
    for i, rows in enumerate(idx):
        sub = m[np.ix_(rows, range(d))]
        for j, cols in enumerate(idx):
            out[i, j] = np.linalg.det(sub[:, cols])
    return out


# ---------------------------------------------------------------------------
# Singular-value potential
# ---------------------------------------------------------------------------

def _log_top_sv_of_word(mats, word) -> float:
    """log of the top singular value of ``mats[w_{n-1}] ... mats[w_0]``,
    with running renormalization so long products never overflow."""
    prod = mats[word[0]].copy()
    logscale = 0.0
    for s in word[1:]:
        prod = mats[s] @ prod
        top = np.abs(prod).max()
        if top > _RENORM_CEIL or top < 1.0 / _RENORM_CEIL:
            if top == 0.0 or not np.isfinite(top):
                raise SingularProduct("matrix product degenerated to zero or overflow")
            prod /= top
            logscale += math.log(top)
    sv = np.linalg.svd(prod, compute_uv=False)[0]
    if sv <= 0 or not np.isfinite(sv):
        raise SingularProduct("top singular value vanished")
    return logscale + math.log(sv)


def singular_value_potential(spec: CocycleSpec, alpha, w) -> float:
    """``sum_i alpha_i log s_i`` of the cocycle product along word ``w``.

    For ``alpha = (1, 0, ..., 0)`` this is the log operator norm; for all-ones
    alpha it collapses to ``log |det|`` (computed exactly from the factors).
    """
    weight = alpha if isinstance(alpha, SingularWeight) else SingularWeight(tuple(alpha))
    word = tuple(int(s) for s in w)
    if len(word) < 1:
        raise ValueError("word must be nonempty")
    total = 0.0
    d = spec.dimension
    for k, coeff in weight.abel_coefficients():
        if k == d:
            piece = sum(math.log(abs(np.linalg.det(spec.generators[s]))) for s in word)
        else:
            piece = _log_top_sv_of_word(spec.compound_generators(k), word)
        total += coeff * piece
    return float(total)


def _log_norms_by_depth(spec: CocycleSpec, k: int, n_max: int,
                        cap: int = DEFAULT_WORD_CAP):
    """Per-depth arrays of ``log ||wedge^k A_w||`` over admissible words in
    lexicographic order, built along the shared word tree."""
    sys = spec.system
    if k == spec.dimension:
        logdets = np.array([math.log(abs(np.linalg.det(g))) for g in spec.generators])
        return [logdets[word_matrix(sys, n, cap=cap)].sum(axis=1)
                for n in range(1, n_max + 1)]
    mats = np.stack(spec.compound_generators(k))
    out = []
    prods = None
    scales = None
    for n in range(1, n_max + 1):
        level_words = word_matrix(sys, n, cap=cap)
        if n == 1:
            prods = mats[level_words[:, 0]].copy()
            scales = np.zeros(level_words.shape[0])
        else:
            # parents are the (n-1)-prefixes; lexicographic order makes the
            # parent of row i the unique previous-level row it extends
            prev_words = word_matrix(sys, n - 1, cap=cap)
            parent = _prefix_parents(prev_words, level_words)
            prods = np.matmul(mats[level_words[:, -1]], prods[parent])
            scales = scales[parent].copy()
            top = np.abs(prods).max(axis=(1, 2))
            if (top == 0).any() or not np.isfinite(top).all():
                raise SingularProduct("batched product degenerated")
            hot = (top > _RENORM_CEIL) | (top < 1.0 / _RENORM_CEIL)
            if hot.any():
                prods[hot] /= top[hot, None, None]
                scales[hot] += np.log(top[hot])
        svals = np.linalg.svd(prods, compute_uv=False)[..., 0]
        if (svals <= 0).any() or not np.isfinite(svals).all():
            raise SingularProduct("batched product lost rank")
        out.append(scales + np.log(svals))
    return out


def _prefix_parents(prev_words: np.ndarray, words: np.ndarray) -> np.ndarray:
    """Index into ``prev_words`` of each row's (n-1)-prefix."""
    m = int(max(prev_words.max(), words.max())) + 1
    powers = m ** np.arange(prev_words.shape[1] - 1, -1, -1)
    codes = prev_words @ powers
    lookup = np.full(int(codes.max()) + 1, -1, dtype=np.int64)
    lookup[codes] = np.arange(prev_words.shape[0])
    return lookup[words[:, :-1] @ powers]


def word_potentials_by_depth(spec: CocycleSpec, alpha, n_max: int,
                             cap: int = DEFAULT_WORD_CAP):
    """Per-depth arrays of the singular-value potential over admissible
    words (lexicographic), shared by the pressure and variational checks."""
    weight = alpha if isinstance(alpha, SingularWeight) else SingularWeight(tuple(alpha))
    pieces = {}
    for k, coeff in weight.abel_coefficients():
        pieces[k] = (coeff, _log_norms_by_depth(spec, k, n_max, cap=cap))
    out = []
    for n in range(n_max):
        total = None
        for k, (coeff, arrays) in pieces.items():
            term = coeff * arrays[n]
            total = term if total is None else total + term
        if total is None:  # alpha identically zero
            total = np.zeros(word_matrix(spec.system, n + 1, cap=cap).shape[0])
        out.append(total)
    return out


# ---------------------------------------------------------------------------
# Sub-additive pressure
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SubadditivePressureEstimate:
    """Per-depth normalized log sums with the Fekete upper bound.

    ``fekete_upper`` (the minimum over computed depths) is a rigorous upper
    bound on the limit because the weighted word sums are submultiplicative
    for nonincreasing alpha; ``value`` is the last-depth estimate capped by
    that bound.  ``psi_min_depth`` holds, for each deepest-level word, the
    running minimum of ``(1/n) phi_n`` over its prefixes — the cylinder-wise
    upper approximant of the asymptotic per-step potential.
    """

    per_depth: tuple
    fekete_upper: float
    value: float
    psi_min_depth: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.value > self.fekete_upper + 1e-12:
            raise ValueError("value must not exceed the Fekete upper bound")

    def to_csv(self) -> str:
        lines = ["n,value_n,fekete_upper"]
        running = np.inf
        for n, v in self.per_depth:
            running = min(running, v)
            lines.append(f"{n},{v:.12g},{running:.12g}")
        return "\n".join(lines) + "\n"


def subadditive_pressure(spec: CocycleSpec, alpha, n_max: int,
                         cap: int = DEFAULT_WORD_CAP) -> SubadditivePressureEstimate:
    """Estimate the pressure of the singular-value potential sequence:
    ``Z_n = sum_w exp(phi_alpha(w))`` over admissible ``n``-words."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    phis = word_potentials_by_depth(spec, alpha, n_max, cap=cap)
    rows = []
    for n, vals in enumerate(phis, start=1):
        rows.append((n, float(logsumexp(vals)) / n))
    fekete = min(v for _, v in rows)
    value = min(rows[-1][1], fekete)
    # running minimum of (1/n) phi_n along prefix chains
    runmin = phis[0].copy()
    for n in range(2, n_max + 1):
        parent = _prefix_parents(word_matrix(spec.system, n - 1, cap=cap),
                                 word_matrix(spec.system, n, cap=cap))
        runmin = np.minimum(runmin[parent], phis[n - 1] / n)
    return SubadditivePressureEstimate(per_depth=tuple(rows), fekete_upper=fekete,
                                       value=value, psi_min_depth=runmin)


def psi_phi_approx(spec: CocycleSpec, alpha, w, N: int) -> float:
    """``min over n <= N of (1/n) phi_alpha`` on prefixes of the periodic
    extension of ``w``; a certified upper bound on the asymptotic per-step
    potential at the periodic point, nonincreasing in ``N``."""
    if not 1 <= N <= 64:
        raise ValueError("N must lie in 1..64")
    word = tuple(int(s) for s in w)
    if not spec.system.is_admissible(word):
        raise ValueError("word is not admissible")
    if not spec.system.transition[word[-1], word[0]]:
        raise ValueError("word is not cyclically admissible (no periodic extension)")
    stream = [word[i % len(word)] for i in range(N)]
    best = np.inf
    for n in range(1, N + 1):
        best = min(best, singular_value_potential(spec, alpha, stream[:n]) / n)
    return float(best)


# ---------------------------------------------------------------------------
# Lyapunov spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LyapunovSpectrum:
    """QR-estimated Lyapunov exponents with per-exponent standard errors.

    ``det_gap`` is the difference between the exponent sum and the exact
    ``integral log|det A| d mu``; the determinant identity holds within
    3 standard errors of the sum.
    """

    exponents: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False)
    measure: MarkovMeasure = field(repr=False)
    samples: int = 0
    n_steps: int = 0
    seed: int = 0
    det_gap: float = 0.0

    def to_csv(self) -> str:
        lines = ["i,lambda_i,stderr"]
        for i, (lam, se) in enumerate(zip(self.exponents, self.stderr), start=1):
            lines.append(f"{i},{lam:.12g},{se:.12g}")
        return "\n".join(lines) + "\n"


def _sample_markov_paths(mu: MarkovMeasure, n_steps: int, n_samples: int, rng):
    """(n_samples, n_steps) array of symbol paths drawn from ``mu``."""
    cum = np.cumsum(mu.stochastic, axis=1)
    start_cum = np.cumsum(mu.stationary)
    states = np.searchsorted(start_cum, rng.random(n_samples), side="right")
    states = np.minimum(states, mu.system.alphabet_size - 1)
    path = np.empty((n_samples, n_steps), dtype=np.int64)
    path[:, 0] = states
    for step in range(1, n_steps):
        u = rng.random(n_samples)
        rows = cum[path[:, step - 1]]
        path[:, step] = (u[:, None] > rows).sum(axis=1)
    return path


def integral_log_det(spec: CocycleSpec, mu: MarkovMeasure) -> float:
    """Exact ``integral log |det A| d mu`` (one-step cocycle)."""
    logdets = np.array([math.log(abs(np.linalg.det(g))) for g in spec.generators])
    return float(mu.stationary @ logdets)


def lyapunov_qr(spec: CocycleSpec, mu: MarkovMeasure, n_steps: int = 2000,
                n_samples: int = 32, seed: int = 0) -> LyapunovSpectrum:
    """Sampled-orbit QR estimate of the full Lyapunov spectrum."""
    require_irreducible_measure(mu)
    if n_steps < 1000:
        raise ValueError("n_steps must be >= 1000 for a stable estimate")
    rng = np.random.default_rng(seed)
    paths = _sample_markov_paths(mu, n_steps, n_samples, rng)
    d = spec.dimension
    gens = np.stack(spec.generators)
    q = np.broadcast_to(np.eye(d), (n_samples, d, d)).copy()
    acc = np.zeros((n_samples, d))
    for step in range(n_steps):
        b = np.matmul(gens[paths[:, step]], q)
        q, r = np.linalg.qr(b)
        diag = np.einsum("sii->si", r)
        signs = np.sign(diag)
        signs[signs == 0] = 1.0
        q = q * signs[:, None, :]
        acc += np.log(np.abs(diag))
    per_sample = acc / n_steps                     # (samples, d)
    exponents = per_sample.mean(axis=0)
    order = np.argsort(-exponents)
    exponents = exponents[order]
    stderr = per_sample.std(axis=0, ddof=1)[order] / math.sqrt(n_samples)
    sums = per_sample.sum(axis=1)
    det_gap = float(sums.mean() - integral_log_det(spec, mu))
    return LyapunovSpectrum(exponents=exponents, stderr=stderr, measure=mu,
                            samples=n_samples, n_steps=n_steps, seed=seed,
                            det_gap=det_gap)


@dataclass(frozen=True)
class ExteriorEstimate:
    value: float     # estimate of lambda_1 + ... + lambda_k
    stderr: float
    k: int
    samples: int
    n_steps: int
    seed: int


def lyapunov_exterior(spec: CocycleSpec, mu: MarkovMeasure, k: int,
                      n_steps: int = 2000, n_samples: int = 32,
                      seed: int = 0) -> ExteriorEstimate:
    """Partial exponent sums via growth of k-th exterior-power norms."""
    require_irreducible_measure(mu)
    if not 1 <= k <= spec.dimension:
        raise ValueError(f"k must lie in 1..{spec.dimension}")
    rng = np.random.default_rng(seed)
    paths = _sample_markov_paths(mu, n_steps, n_samples, rng)
    mats = np.stack(spec.compound_generators(k))
    dim = mats.shape[1]
    prod = np.broadcast_to(np.eye(dim), (n_samples, dim, dim)).copy()
    scales = np.zeros(n_samples)
    for step in range(n_steps):
        prod = np.matmul(mats[paths[:, step]], prod)
        top = np.abs(prod).max(axis=(1, 2))
        hot = (top > 1e50) | (top < 1e-50)
        if hot.any():
            prod[hot] /= top[hot, None, None]
            scales[hot] += np.log(top[hot])
    svals = np.linalg.svd(prod, compute_uv=False)[..., 0]
    per_sample = (scales + np.log(svals)) / n_steps
    value = float(per_sample.mean())
    stderr = float(per_sample.std(ddof=1) / math.sqrt(n_samples))
    return ExteriorEstimate(value=value, stderr=stderr, k=k, samples=n_samples,
                            n_steps=n_steps, seed=seed)


# ---------------------------------------------------------------------------
# Variational inequality of the sub-additive formalism
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CfhRow:
    mu_id: str
    entropy: float
    f_star_upper: float
    total: float
    slack: float       # pressure upper bound minus total
    allowance: float


@dataclass(frozen=True)
class CfhReport:
    """Grid check of ``entropy + F*(mu) <= pressure``.

    ``f_star_upper`` per measure is ``min over n <= N of (1/n) integral
    phi_n d mu`` computed by exact word enumeration — an upper bound on the
    true asymptotic integral by Fekete, so negative slack beyond the
    per-measure allowance (the residual decay between N/2 and N, plus 1e-6)
    would indicate a genuine violation.
    """

    rows: tuple[CfhRow, ...]
    pressure_upper: float
    best_lower_bound: float
    duality_gap: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_csv(self) -> str:
        lines = ["mu_id,entropy,f_star_upper,total,slack,allowance"]
        for r in self.rows:
            lines.append(f"{r.mu_id},{r.entropy:.12g},{r.f_star_upper:.12g},"
                         f"{r.total:.12g},{r.slack:.12g},{r.allowance:.12g}")
        return "\n".join(lines) + "\n"


def cfh_variational_check(spec: CocycleSpec, alpha, measure_grid, n_max: int = 12,
                          psi_depth: int = 12, tol: float = 1e-6,
                          cap: int = DEFAULT_WORD_CAP) -> CfhReport:
    """Check the sub-additive variational inequality over a measure grid."""
    estimate = subadditive_pressure(spec, alpha, n_max, cap=cap)
    p_upper = estimate.fekete_upper
    phis = word_potentials_by_depth(spec, alpha, psi_depth, cap=cap)
    words_by_depth = [word_matrix(spec.system, n, cap=cap)
                      for n in range(1, psi_depth + 1)]
    rows = []
    violations = 0
    best = -np.inf
    for idx, mu in enumerate(measure_grid):
        means = np.array([cylinder_weights(mu, words_by_depth[n]) @ phis[n] / (n + 1)
                          for n in range(psi_depth)])
        f_upper = float(means.min())
        f_half = float(means[: max(1, psi_depth // 2)].min())
        allowance = max(0.0, f_half - f_upper)
        h = ks_entropy(mu)
        total = h + f_upper
        slack = p_upper - total
        best = max(best, total)
        if slack < -(tol + allowance):
            violations += 1
        rows.append(CfhRow(mu_id=mu.label or f"mu{idx}", entropy=h,
                           f_star_upper=f_upper, total=total, slack=float(slack),
                           allowance=float(allowance)))
    return CfhReport(rows=tuple(rows), pressure_upper=float(p_upper),
                     best_lower_bound=float(best),
                     duality_gap=float(p_upper - best), violations=violations)


# ---------------------------------------------------------------------------
# Lyapunov-optimizing oracle (zero-temperature reference)
# ---------------------------------------------------------------------------

def lyapunov_periodic_oracle(spec: CocycleSpec, alpha, max_period: int = 12,
                             cap: int = DEFAULT_WORD_CAP):
    """Best per-step singular-value average over periodic orbits.

    On a periodic orbit the asymptotic singular values of the cocycle are the
    eigenvalue moduli of the period product, so the orbit value is
    ``(1/p) sum_i alpha_i log |eig_i|`` (moduli sorted descending).  Returns
    ``(best_value, witness_word)``; a certified lower bound on the maximal
    Lyapunov-weighted average over invariant measures.
    """
    weight = alpha if isinstance(alpha, SingularWeight) else SingularWeight(tuple(alpha))
    sys = spec.system
    best = -np.inf
    witness = None
    for p in range(1, max_period + 1):
        words = word_matrix(sys, p, cap=cap)
        cyclic = sys.transition[words[:, -1], words[:, 0]].astype(bool)
        for row in words[cyclic]:
            prod = np.eye(spec.dimension)
            for s in row:
                prod = spec.generators[int(s)] @ prod
            mods = np.sort(np.abs(np.linalg.eigvals(prod)))[::-1]
            val = sum(a * math.log(max(m, 1e-300))
                      for a, m in zip(weight.alpha, mods)) / p
            if val > best + 1e-15:
                best = val
                witness = tuple(int(s) for s in row)
    return float(best), witness
