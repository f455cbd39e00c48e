"""Potentials and measures on SFTs.

A potential is constant on depth-``k`` cylinders and stored as a table over
the admissible ``k``-words in lexicographic order.  Invariant measures are
represented by one-step Markov data (stochastic matrix plus stationary row);
that is enough because every equilibrium state of a locally constant
potential on an SFT is Markov of matching order, and higher orders are
reached by recoding with ``higher_block``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DepthMismatch,
    NonIrreducibleMeasure,
    SystemMismatch,
    WordTooShort,
)
from .symbolic import DEFAULT_WORD_CAP, SftSystem, Word, word_matrix

#: Entries below this are treated as exact zeros inside entropy sums.
_ZERO_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# Locally constant potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocallyConstantPotential:
    """A real potential constant on depth-``k`` cylinders.

    ``values[i]`` belongs to the ``i``-th admissible ``k``-word in
    lexicographic order (the order produced by ``enumerate_words``).
    """

    system: SftSystem
    depth: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        words = word_matrix(self.system, self.depth)
        if v.shape[0] != words.shape[0]:
            raise ValueError(
                f"need one value per admissible {self.depth}-word "
                f"({words.shape[0]}), got {v.shape[0]}")
        if not np.isfinite(v).all():
            raise ValueError("potential values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_words", words)
        object.__setattr__(self, "_index",
                           {tuple(int(s) for s in row): i for i, row in enumerate(words)})

    @property
    def words(self) -> np.ndarray:
        """Admissible depth-``k`` words, one per row, lexicographic."""
        return self._words

    def value_of(self, word) -> float:
        """Value on the cylinder of ``word`` (``len(word) == depth``)."""
        return float(self.values[self._index[tuple(word)]])

    def word_index(self, word) -> int:
        return self._index[tuple(word)]


def potential_from_dict(sys: SftSystem, depth: int, table) -> LocallyConstantPotential:
    """Build a potential from a ``{word: value}`` mapping covering every
    admissible depth-``k`` word."""
    words = word_matrix(sys, depth)
    vals = np.empty(words.shape[0])
    for i, row in enumerate(words):
        key = tuple(int(s) for s in row)
        if key not in table:
            raise ValueError(f"missing value for admissible word {key}")
        vals[i] = table[key]
    if len(table) != words.shape[0]:
        extra = set(map(tuple, table)) - {tuple(int(s) for s in r) for r in words}
        raise ValueError(f"table contains non-admissible words: {sorted(extra)}")
    return LocallyConstantPotential(sys, depth, vals)


def constant_potential(sys: SftSystem, c: float, depth: int = 1) -> LocallyConstantPotential:
    n = word_matrix(sys, depth).shape[0]
    return LocallyConstantPotential(sys, depth, np.full(n, float(c)))


def random_potential(sys: SftSystem, depth: int, rng, scale: float = 1.0) -> LocallyConstantPotential:
    n = word_matrix(sys, depth).shape[0]
    return LocallyConstantPotential(sys, depth, scale * rng.standard_normal(n))


def birkhoff_sum(phi: LocallyConstantPotential, w, n: int | None = None) -> float:
    """Exact ergodic sum of ``phi`` over the first ``n`` shifts of the
    cylinder ``[w]``; requires ``len(w) >= n + depth - 1``, on which the sum
    is constant.  ``n`` defaults to the largest admissible value."""
    w = tuple(int(s) for s in w)
    k = phi.depth
    if n is None:
        n = len(w) - k + 1
    if n < 1 or len(w) < n + k - 1:
        raise WordTooShort(
            f"word of length {len(w)} cannot support n={n} terms of a depth-{k} potential")
    return float(sum(phi.value_of(w[i:i + k]) for i in range(n)))


# ---------------------------------------------------------------------------
# Markov measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """A shift-invariant Markov measure: stochastic matrix + stationary row.

    Cylinder weights are ``mu([w]) = stationary[w_0] * prod_i
    stochastic[w_i, w_{i+1}]``; they implement integration of locally
    constant potentials.
    """

    system: SftSystem
    stochastic: np.ndarray = field(repr=False)
    stationary: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        p = np.asarray(self.stochastic, dtype=float)
        pi = np.asarray(self.stationary, dtype=float).reshape(-1)
        m = self.system.alphabet_size
        if p.shape != (m, m) or pi.shape != (m,):
            raise ValueError("stochastic must be m x m and stationary length m")
        if (p < 0).any() or (pi < 0).any():
            raise ValueError("probabilities must be nonnegative")
        if np.abs(p.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("rows of stochastic must sum to 1 within 1e-12")
        if abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("stationary must sum to 1 within 1e-12")
        if ((p > 0) & (self.system.transition == 0)).any():
            raise ValueError("stochastic places mass on a forbidden transition")
        if np.abs(pi @ p - pi).max() > 1e-10:
            raise ValueError("stationary must be invariant under stochastic (1e-10)")
        p.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "stochastic", p)
        object.__setattr__(self, "stationary", pi)


def stationary_of(stochastic: np.ndarray) -> np.ndarray:
    """Stationary row vector of a stochastic matrix (left Perron vector)."""
    p = np.asarray(stochastic, dtype=float)
    w, v = np.linalg.eig(p.T)
    idx = int(np.argmin(np.abs(w - 1.0)))
    pi = np.abs(np.real(v[:, idx]))
    pi = pi / pi.sum()
    # one power-refinement pass cleans up eigensolver noise
    for _ in range(4):
        pi = pi @ p
        pi /= pi.sum()
    return pi


def markov_from_stochastic(sys: SftSystem, stochastic, label: str = "") -> MarkovMeasure:
    p = np.asarray(stochastic, dtype=float)
    return MarkovMeasure(sys, p, stationary_of(p), label=label)


def bernoulli_measure(sys: SftSystem, probs, label: str = "") -> MarkovMeasure:
    """Product measure with symbol weights ``probs`` (full shift only)."""
    probs = np.asarray(probs, dtype=float)
    if (sys.transition == 0).any():
        raise ValueError("Bernoulli measures require the full shift")
    p = np.tile(probs / probs.sum(), (sys.alphabet_size, 1))
    return MarkovMeasure(sys, p, probs / probs.sum(),
                         label=label or f"bernoulli{tuple(np.round(probs, 6))}")


def point_mass_measure(sys: SftSystem, symbol: int) -> MarkovMeasure:
    """Dirac mass on the fixed point ``symbol, symbol, ...`` (needs a loop)."""
    if not sys.transition[symbol, symbol]:
        raise ValueError(f"symbol {symbol} has no self-loop")
    m = sys.alphabet_size
    p = np.zeros((m, m))
    for i in range(m):
        if sys.transition[i, symbol]:
            p[i, symbol] = 1.0
        else:
            succ = np.flatnonzero(sys.transition[i])
            p[i, succ] = 1.0 / len(succ)
    pi = np.zeros(m)
    pi[symbol] = 1.0
    return MarkovMeasure(sys, p, pi, label=f"delta({symbol})")


def random_markov_measure(sys: SftSystem, rng, concentration: float = 1.0,
                          label: str = "") -> MarkovMeasure:
    """Full-support Markov measure with Dirichlet rows on the allowed
    transitions.  Requires an irreducible system to be meaningful."""
    m = sys.alphabet_size
    p = np.zeros((m, m))
    for i in range(m):
        succ = np.flatnonzero(sys.transition[i])
        p[i, succ] = rng.dirichlet(np.full(len(succ), concentration))
        # keep rows bounded away from degenerate support
        p[i, succ] = np.maximum(p[i, succ], 1e-6)
        p[i, succ] /= p[i, succ].sum()
    return markov_from_stochastic(sys, p, label=label)


def require_irreducible_measure(mu: MarkovMeasure):
    """Raise NonIrreducibleMeasure unless the support of ``mu.stochastic``
    is strongly connected."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    support = (mu.stochastic > 0).astype(int)
    n, _ = connected_components(csr_matrix(support), directed=True, connection="strong")
    if n != 1:
        raise NonIrreducibleMeasure(f"stochastic support splits into {n} classes")


# ---------------------------------------------------------------------------
# Cylinder marginals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CylinderMarginal:
    """Projection of a measure onto depth-``k`` cylinder weights."""

    system: SftSystem
    depth: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        n = word_matrix(self.system, self.depth).shape[0]
        if w.shape[0] != n:
            raise ValueError(f"need {n} weights, got {w.shape[0]}")
        if (w < -1e-15).any():
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        w = np.maximum(w, 0.0)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def to_csv(self) -> str:
        """CSV with header ``word,weight``; words lexicographic."""
        words = word_matrix(self.system, self.depth)
        buf = io.StringIO()
        buf.write("word,weight\n")
        for row, wt in zip(words, self.weights):
            buf.write(f"{format_word(row)},{wt:.12g}\n")
        return buf.getvalue()


def format_word(row) -> str:
    """Digit string for alphabets up to 10 symbols, dash-joined beyond."""
    symbols = [int(s) for s in row]
    if all(s < 10 for s in symbols):
        return "".join(str(s) for s in symbols)
    return "-".join(str(s) for s in symbols)


def cylinder_weights(mu: MarkovMeasure, words: np.ndarray) -> np.ndarray:
    """Vector of ``mu([w])`` for each row ``w`` of ``words``."""
    w = mu.stationary[words[:, 0]].copy()
    for i in range(words.shape[1] - 1):
        w *= mu.stochastic[words[:, i], words[:, i + 1]]
    return w


def marginal(mu: MarkovMeasure, depth: int, cap: int = DEFAULT_WORD_CAP) -> CylinderMarginal:
    """Depth-``k`` cylinder marginal of a Markov measure."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    words = word_matrix(mu.system, depth, cap=cap)
    return CylinderMarginal(mu.system, depth, cylinder_weights(mu, words))


def marginal_distance(a: CylinderMarginal, b: CylinderMarginal) -> float:
    """Total variation distance of two equal-depth marginals, in [0, 2]."""
    if a.system != b.system:
        raise SystemMismatch("marginals live on different systems")
    if a.depth != b.depth:
        raise DepthMismatch(f"depths {a.depth} and {b.depth} differ")
    return float(np.abs(a.weights - b.weights).sum())


def integrate(mu: MarkovMeasure, phi: LocallyConstantPotential) -> float:
    """The pairing ``integral phi d mu`` over depth-``k`` cylinders."""
    if mu.system != phi.system:
        raise SystemMismatch("measure and potential live on different systems")
    return float(cylinder_weights(mu, phi.words) @ phi.values)


def ks_entropy(mu: MarkovMeasure) -> float:
    """Kolmogorov-Sinai entropy of a Markov measure, with 0*log 0 = 0."""
    p = mu.stochastic
    mask = p > _ZERO_FLOOR
    plogp = np.zeros_like(p)
    plogp[mask] = p[mask] * np.log(p[mask])
    return float(-(mu.stationary @ plogp.sum(axis=1)))


def markov_from_pair_marginal(sys: SftSystem, pair: CylinderMarginal,
                              label: str = "") -> MarkovMeasure:
    """The Markov measure whose depth-2 marginal matches ``pair``.

    ``pair`` must be shift-invariant (row and column marginals agree), which
    holds for any depth-2 marginal of an invariant measure and for convex
    combinations of such.
    """
    if pair.depth != 2:
        raise DepthMismatch("need a depth-2 marginal")
    words = word_matrix(sys, 2)
    m = sys.alphabet_size
    joint = np.zeros((m, m))
    joint[words[:, 0], words[:, 1]] = pair.weights
    row = joint.sum(axis=1)
    col = joint.sum(axis=0)
    if np.abs(row - col).max() > 1e-10:
        raise ValueError("pair marginal is not shift-invariant")
    p = np.zeros((m, m))
    nz = row > _ZERO_FLOOR
    p[nz] = joint[nz] / row[nz, None]
    for i in np.flatnonzero(~nz):
        succ = np.flatnonzero(sys.transition[i])
        p[i, succ] = 1.0 / len(succ)
    return MarkovMeasure(sys, p, row / row.sum(), label=label)
