"""Finite presentations of the dynamical systems the rest of the package computes on.

Subshifts of finite type (SFTs) are the universal presentation: every exact
computation (pressure, entropy, equilibrium states, cocycle pressure) runs on
an SFT.  Beta-shifts enter through a truncated follower-set automaton, and
piecewise-expanding interval maps through a small set of named analytic branch
families, so that derivatives stay exact and serializable.

Conventions
-----------
* ``transition[i][j] = 1`` means symbol ``j`` may follow symbol ``i``.
* Words are tuples of symbols read left to right; all word lists are
  lexicographically ascending (this ordering is part of the CSV contract).
* The metric on a one-sided shift is ``d(x, y) = 2**-min{i >= 0 : x_i != y_i}``,
  under which a maximal separated set is one point per admissible word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    CombinatorialOverflow,
    DegenerateBeta,
    EmptyRowOrColumn,
    NonMonotoneDerivative,
)

#: Default cap on the number of words any enumeration may produce.
DEFAULT_WORD_CAP = 10**7

Word = tuple[int, ...]


# ---------------------------------------------------------------------------
# Subshifts of finite type
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SftSystem:
    """A one-sided subshift of finite type.

    Parameters
    ----------
    alphabet_size : int
        Number of symbols ``m``; symbols are ``0 .. m-1``.
    transition : ndarray
        ``m x m`` array of 0/1; entry ``(i, j)`` allows ``j`` after ``i``.
    label : str
        Human-readable tag carried into reports and CSV summaries.
    """

    alphabet_size: int
    transition: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=np.int64)
        m = self.alphabet_size
        if m <= 0:
            raise ValueError("alphabet_size must be positive")
        if t.shape != (m, m):
            raise ValueError(f"transition must be {m}x{m}, got {t.shape}")
        if not np.isin(t, (0, 1)).all():
            raise ValueError("transition entries must be exactly 0 or 1")
        row_empty = np.flatnonzero(t.sum(axis=1) == 0)
        if row_empty.size:
            raise EmptyRowOrColumn(int(row_empty[0]), "row")
        col_empty = np.flatnonzero(t.sum(axis=0) == 0)
        if col_empty.size:
            raise EmptyRowOrColumn(int(col_empty[0]), "column")
        t.setflags(write=False)
        object.__setattr__(self, "transition", t)

    def __eq__(self, other):
        if not isinstance(other, SftSystem):
            return NotImplemented
        return (self.alphabet_size == other.alphabet_size
                and np.array_equal(self.transition, other.transition))

    def __hash__(self):
        return hash((self.alphabet_size, self.transition.tobytes()))

    def is_admissible(self, word) -> bool:
        """True if every adjacent pair of ``word`` is transition-allowed."""
        w = tuple(word)
        if not w:
            return False
        if any(s < 0 or s >= self.alphabet_size for s in w):
            return False
        t = self.transition
        return all(t[w[i], w[i + 1]] for i in range(len(w) - 1))

    def successors(self, symbol: int) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.transition[symbol]))


def build_sft(alphabet_size: int, transition, label: str = "") -> SftSystem:
    """Validate and build an SFT; rejects stranded symbols.

    Raises
    ------
    EmptyRowOrColumn
        If some symbol has no successor (empty row) or no predecessor
        (empty column).
    """
    return SftSystem(alphabet_size, np.asarray(transition), label=label)


def full_shift(m: int, label: str = "") -> SftSystem:
    """The full shift on ``m`` symbols (all transitions allowed)."""
    return build_sft(m, np.ones((m, m), dtype=int), label=label or f"full {m}-shift")


def golden_mean_shift() -> SftSystem:
    """Two symbols, word "11" forbidden (symbol 1 cannot follow 1)."""
    return build_sft(2, [[1, 1], [1, 0]], label="golden-mean shift")


def word_count(sys: SftSystem, n: int):
    """Exact number of admissible words of length ``n`` (Python integer).

    Equals the entrywise sum of ``transition**(n-1)``; computed in exact
    integer arithmetic so the count never silently overflows.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return sys.alphabet_size
    t = sys.transition.astype(object)
    # exponentiation by squaring in exact integers
    result = None
    base = t
    p = n - 1
    while p:
        if p & 1:
            result = base if result is None else result @ base
        p >>= 1
        if p:
            base = base @ base
    return int(result.sum())


def word_matrix(sys: SftSystem, n: int, cap: int = DEFAULT_WORD_CAP) -> np.ndarray:
    """All admissible words of length ``n`` as an ``(N, n)`` int array.

    Rows are lexicographically ascending.  Raises CombinatorialOverflow if
    the count would exceed ``cap``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    count = word_count(sys, n)
    if count > cap:
        raise CombinatorialOverflow(count, cap)
    m = sys.alphabet_size
    words = np.arange(m, dtype=np.int32).reshape(m, 1)
    if n == 1:
        return words
    # successor lists in CSR form, so each extension step is vectorized
    succ_lists = [np.flatnonzero(sys.transition[i]).astype(np.int32) for i in range(m)]
    deg = np.array([len(s) for s in succ_lists], dtype=np.int64)
    succ_flat = np.concatenate(succ_lists)
    offsets = np.concatenate(([0], np.cumsum(deg)))[:-1]
    for _ in range(n - 1):
        lasts = words[:, -1]
        counts = deg[lasts]
        total = int(counts.sum())
        parent = np.repeat(np.arange(words.shape[0]), counts)
        starts = np.cumsum(counts) - counts
        pos = np.arange(total) - np.repeat(starts, counts)
        child = succ_flat[offsets[lasts][parent] + pos]
        words = np.hstack([words[parent], child.reshape(-1, 1).astype(np.int32)])
    return words


def enumerate_words(sys: SftSystem, n: int, cap: int = DEFAULT_WORD_CAP) -> list[Word]:
    """Lexicographically ordered list of all admissible words of length ``n``."""
    return [tuple(int(s) for s in row) for row in word_matrix(sys, n, cap=cap)]


def higher_block(sys: SftSystem, k: int, cap: int = DEFAULT_WORD_CAP):
    """Recode to the SFT whose symbols are the admissible ``k``-words.

    ``w -> w'`` is allowed iff the two words overlap in ``k - 1`` symbols; the
    combined ``(k+1)``-word is then automatically admissible.  Topological
    entropy is preserved.  Returns ``(recoded_system, word_of_symbol)`` where
    ``word_of_symbol[s]`` is the length-``k`` word the new symbol ``s`` stands
    for (in lexicographic order, so depth-``k`` potential tables align).
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    words = word_matrix(sys, k, cap=cap)
    n_words = words.shape[0]
    by_prefix: dict[Word, list[int]] = {}
    for idx in range(n_words):
        by_prefix.setdefault(tuple(words[idx, :-1].tolist()), []).append(idx)
    trans = np.zeros((n_words, n_words), dtype=np.int64)
    for idx in range(n_words):
        key = tuple(words[idx, 1:].tolist())
        for jdx in by_prefix.get(key, ()):
            trans[idx, jdx] = 1
    recoded = build_sft(n_words, trans, label=f"{sys.label or 'sft'}[{k}-block]")
    word_of_symbol = {s: tuple(int(x) for x in words[s]) for s in range(n_words)}
    return recoded, word_of_symbol


# ---------------------------------------------------------------------------
# Beta-shifts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaShiftSpec:
    """Greedy digit expansion of 1 in powers of 1/beta, truncated at depth N.

    ``expansion[n-1]`` is the digit ``a_n = floor(beta**n - sum_{j<n} a_j
    beta**(n-j))``; once the expansion terminates, the remaining digits are 0.
    For integer beta the first digit equals beta itself (out of the usual
    digit range) and the associated shift is the full beta-shift.
    """

    beta: float
    expansion: tuple[int, ...]
    truncation_depth: int

    def __post_init__(self):
        if self.beta <= 1.0:
            raise DegenerateBeta(f"beta must exceed 1, got {self.beta}")
        if len(self.expansion) != self.truncation_depth:
            raise ValueError("expansion length must equal truncation_depth")
        a = self.expansion
        is_integer = float(self.beta).is_integer()
        if is_integer:
            if a[0] != int(self.beta):
                raise ValueError("integer beta must have a_1 = beta")
        else:
            if a[0] != math.floor(self.beta):
                raise ValueError("a_1 must equal floor(beta)")
            top = math.ceil(self.beta) - 1
            if any(d < 0 or d > top for d in a):
                raise ValueError(f"digits must lie in 0..{top}")


def greedy_beta_expansion(beta: float, depth: int, snap_tol: float = 1e-9):
    """Greedy digits of 1 in base beta, with exact rational remainders.

    Returns ``(digits, terminated_at)`` where ``terminated_at`` is the index
    ``p`` (1-based) at which the remainder vanished, or ``None``.  Remainders
    are tracked in exact arithmetic on the binary value of ``beta``; a
    remainder below ``snap_tol`` is treated as exact termination (this is how
    Pisot-like parameters given as floats are recognized).
    """
    b = Fraction(beta)
    r = Fraction(1)
    snap = Fraction(snap_tol)
    digits: list[int] = []
    terminated = None
    for n in range(1, depth + 1):
        if terminated is not None:
            digits.append(0)
            continue
        r = b * r
        a = int(r)  # floor for r >= 0
        digits.append(a)
        r -= a
        if r < snap:
            terminated = n
    return digits, terminated


def _edge_sft(edges: list[tuple[int, int]], label: str) -> SftSystem:
    """Vertex SFT on the edge set of a deterministic automaton."""
    n = len(edges)
    trans = np.zeros((n, n), dtype=np.int64)
    for a, (_, tgt) in enumerate(edges):
        for b, (src, _) in enumerate(edges):
            if src == tgt:
                trans[a, b] = 1
    return build_sft(n, trans, label=label)


def build_beta_shift(beta: float, depth: int):
    """Build the truncated beta-shift as an SFT, plus its digit expansion.

    The follower-set automaton of the (quasi-greedy) expansion is truncated at
    ``depth`` and returned as the SFT on its edge set.  When the greedy
    expansion of 1 terminates within ``depth`` (integer and Pisot-like beta),
    the quasi-greedy periodic rewrite closes the automaton exactly and the
    returned SFT has topological entropy exactly ``log beta``; otherwise the
    entropy increases to ``log beta`` as ``depth`` grows.

    Returns
    -------
    (BetaShiftSpec, SftSystem)
    """
    if beta <= 1.0:
        raise DegenerateBeta(f"beta must exceed 1, got {beta}")
    if beta > 10.0:
        raise ValueError("beta must lie in (1, 10]")
    if not 1 <= depth <= 64:
        raise ValueError("depth must lie in 1..64")
    digits, terminated = greedy_beta_expansion(beta, depth)
    spec = BetaShiftSpec(beta=beta, expansion=tuple(digits), truncation_depth=depth)
    label = f"beta-shift(beta={beta:.12g}, depth={depth})"

    if terminated is not None:
        # quasi-greedy rewrite (a_1 .. a_{p-1}, a_p - 1) repeated forever;
        # purely periodic, so the automaton closes exactly with q_p = q_0.
        p = terminated
        qg = list(digits[:p])
        qg[-1] -= 1
        edges: list[tuple[int, int]] = []
        for i in range(p):
            edges.extend((i, 0) for _ in range(qg[i]))   # symbols s < qg[i]
            edges.append((i, (i + 1) % p))               # symbol s = qg[i]
        return spec, _edge_sft(edges, label)

    # non-terminating: keep digits up to the last nonzero one and forbid a
    # full match of that prefix (drops the final continue edge).  This
    # under-approximates the beta-shift, monotonically in depth.
    eff = max(i + 1 for i, d in enumerate(digits) if d > 0)
    d = digits[:eff]
    edges = []
    for i in range(eff):
        edges.extend((i, 0) for _ in range(d[i]))
        if i + 1 < eff:
            edges.append((i, i + 1))
    return spec, _edge_sft(edges, label)


# ---------------------------------------------------------------------------
# Piecewise-expanding interval maps
# ---------------------------------------------------------------------------

_DERIV_SHAPE = {"affine": "constant", "mp_left": "increasing"}


@dataclass(frozen=True)
class Branch:
    """One monotone branch of an interval map, from a named analytic family.

    Families
    --------
    ``affine``
        ``f(x) = a*x + b`` with parameters ``(a, b)``, ``a > 0``.
    ``mp_left``
        ``f(x) = x * (1 + 2**alpha * x**alpha)`` with parameter ``(alpha,)``;
        the intermittent branch with a neutral fixed point at 0.
    """

    family: str
    params: tuple[float, ...]
    lo: float
    hi: float
    full_branch: bool = True

    def __post_init__(self):
        if self.family not in _DERIV_SHAPE:
            raise ValueError(f"unknown branch family {self.family!r}")
        if self.family == "affine" and self.params[0] <= 0:
            raise ValueError("affine branches must have positive slope")
        if self.family == "mp_left" and self.params[0] <= 0:
            raise ValueError("mp_left needs alpha > 0")
        if not self.lo < self.hi:
            raise ValueError("branch domain must be a nondegenerate interval")

    @property
    def increasing(self) -> bool:
        return True  # both families are orientation preserving

    @property
    def derivative_shape(self) -> str:
        """Monotonicity of f' on the branch: "constant" or "increasing"."""
        return _DERIV_SHAPE[self.family]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "affine":
            a, b = self.params
            return a * x + b
        alpha = self.params[0]
        return x * (1.0 + 2.0**alpha * x**alpha)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "affine":
            return np.full_like(x, self.params[0])
        alpha = self.params[0]
        return 1.0 + 2.0**alpha * (1.0 + alpha) * x**alpha

    def inverse(self, y):
        """Preimage in this branch's domain of y in the image interval."""
        y = np.asarray(y, dtype=float)
        if self.family == "affine":
            a, b = self.params
            return (y - b) / a
        alpha = self.params[0]
        c = 2.0**alpha
        # h(x) = x + c*x**(1+alpha) is increasing and convex; Newton from
        # above converges monotonically.
        x = np.minimum(np.maximum(y, 0.0), self.hi)
        for _ in range(60):
            h = x + c * x ** (1.0 + alpha) - y
            dh = 1.0 + c * (1.0 + alpha) * x**alpha
            step = h / dh
            x = x - step
            if np.all(np.abs(step) < 1e-15):
                break
        return np.clip(x, self.lo, self.hi)


@dataclass(frozen=True)
class IntervalMapSystem:
    """A piecewise-monotone interval map given by named analytic branches."""

    branches: tuple[Branch, ...]
    label: str = ""

    def __post_init__(self):
        bs = tuple(sorted(self.branches, key=lambda b: b.lo))
        if abs(bs[0].lo) > 1e-12 or abs(bs[-1].hi - 1.0) > 1e-12:
            raise ValueError("branch domains must cover [0, 1]")
        for left, right in zip(bs, bs[1:]):
            if abs(left.hi - right.lo) > 1e-12:
                raise ValueError("branch domains must partition [0, 1]")
        object.__setattr__(self, "branches", bs)
        self._check_derivatives()

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    def _check_derivatives(self):
        # spot-check that the stored derivative matches the map, central
        # differences at 16 interior points per branch
        for b in self.branches:
            xs = b.lo + (b.hi - b.lo) * (np.arange(16) + 0.5) / 16.0
            h = 1e-6
            approx = (b.value(xs + h) - b.value(xs - h)) / (2 * h)
            exact = b.deriv(xs)
            rel = np.abs(approx - exact) / np.maximum(np.abs(exact), 1e-30)
            if rel.max() > 1e-6:
                raise NonMonotoneDerivative(
                    f"derivative mismatch on branch {b.family}: rel err {rel.max():.2e}")

    def apply(self, x):
        """Evaluate the map (vectorized); points are assigned to branches
        by domain, with the right endpoint going to the later branch."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for i, b in enumerate(self.branches):
            if i + 1 < len(self.branches):
                mask = (x >= b.lo) & (x < b.hi)
            else:
                mask = (x >= b.lo) & (x <= b.hi)
            out[mask] = b.value(x[mask])
        return out


def build_manneville_pomeau(alpha: float) -> IntervalMapSystem:
    """Intermittent map: ``x(1 + 2**alpha x**alpha)`` on [0, 1/2), ``2x - 1``
    on [1/2, 1].  Both branches are full; ``f(0) = 0`` with ``f'(0) = 1``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    left = Branch("mp_left", (alpha,), 0.0, 0.5, full_branch=True)
    right = Branch("affine", (2.0, -1.0), 0.5, 1.0, full_branch=True)
    return IntervalMapSystem((left, right), label=f"manneville-pomeau(alpha={alpha:g})")


def build_doubling_map() -> IntervalMapSystem:
    """Two affine branches of slope 2 (the angle-doubling control case)."""
    left = Branch("affine", (2.0, 0.0), 0.0, 0.5, full_branch=True)
    right = Branch("affine", (2.0, -1.0), 0.5, 1.0, full_branch=True)
    return IntervalMapSystem((left, right), label="doubling map")
