"""Exact local-realistic bounds, product vertices and tightness certificates.

All arithmetic on coefficients and vertices is integer: rational
coefficients are scaled by their common denominator before enumeration, and
ranks come from fraction-free (Bareiss) elimination on Python integers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .construct import EnumerationLimitError, InequalityCoefficients

# exhaustive enumeration refuses profiles with more outcome bits than this
MAX_STRATEGY_BITS = 26
# vertex matrices larger than this many entries are refused
MAX_VERTEX_ENTRIES = 2**26
# chunking threshold for the partial-maximization tensor
_CHUNK_ENTRIES = 2**22


@dataclass(frozen=True)
class BoundResult:
    bound: Fraction
    strategies: list  # maximizing deterministic strategies, capped
    n_strategies: int  # size of the strategy space 2^(sum m_j)


def sign_vectors(m: int) -> np.ndarray:
    """All 2^m vectors in {+1,-1}^m, lexicographic with +1 first."""
    return np.array(list(itertools.product((1, -1), repeat=m)), dtype=np.int64).reshape(-1, m)


def _check_bits(profile: Sequence[int]) -> int:
    bits = int(sum(profile))
    if bits > MAX_STRATEGY_BITS:
        raise EnumerationLimitError(
            f"profile {tuple(profile)} needs 2^{bits} strategies; limit is 2^{MAX_STRATEGY_BITS}"
        )
    return bits


def _partial_values(coef: np.ndarray, outcome_sets: list[np.ndarray]) -> np.ndarray:
    """Contract parties 2..N with every outcome vector.

    Returns W with shape (m1, 2^m2, ..., 2^mN): the Bell expression is
    sum_i a_i W[i, ...] for first-party outcomes a.
    """
    w = coef
    for ax in range(coef.ndim - 1, 0, -1):
        w = np.moveaxis(np.tensordot(w, outcome_sets[ax], axes=([ax], [1])), -1, ax)
    return w


def classical_bound(ineq: InequalityCoefficients, max_strategies: int = 16) -> BoundResult:
    """Maximum of |sum_t c_t prod_j x_j| over all deterministic +-1 strategies.

    The first party is maximized in closed form: for fixed outcomes of the
    others the expression is sum_i a_i w_i, whose maximum over a in
    {+-1}^m1 is sum_i |w_i|.  The remaining parties are enumerated
    exhaustively, so the result is exact.
    """
    profile = ineq.settings_per_party
    bits = _check_bits(profile)
    coef, denom = ineq.scaled_integer()
    outcome_sets = [sign_vectors(m) for m in profile]

    best, where = _max_abs_partial(coef, outcome_sets)
    strategies = []
    for combo in where[:max_strategies]:
        rest = [outcome_sets[j][combo[j - 1]] for j in range(1, len(profile))]
        w = coef
        for ax in range(len(profile) - 1, 0, -1):
            w = np.tensordot(w, rest[ax - 1], axes=([ax], [0]))
        first = np.where(w >= 0, 1, -1)
        strategies.append([first.tolist()] + [r.tolist() for r in rest])
    return BoundResult(Fraction(int(best), denom), strategies, 2**bits)


def _max_abs_partial(coef, outcome_sets):
    n = coef.ndim
    if n == 1:
        return int(np.abs(coef).sum()), [()]
    size = coef.shape[0] * int(np.prod([len(o) for o in outcome_sets[1:]]))
    if size <= _CHUNK_ENTRIES:
        w = _partial_values(coef, outcome_sets)
        vals = np.abs(w).sum(axis=0)
        best = vals.max()
        where = [tuple(int(i) for i in idx) for idx in np.argwhere(vals == best)]
        return best, where
    # fix the last party's outcomes one vector at a time
    best, where = None, []
    for r, outs in enumerate(outcome_sets[-1]):
        sub = np.tensordot(coef, outs, axes=([n - 1], [0]))
        b, w = _max_abs_partial(sub, outcome_sets[:-1])
        if best is None or b > best:
            best, where = b, [wi + (r,) for wi in w]
        elif b == best:
            where.extend(wi + (r,) for wi in w)
    return best, where


def enumerate_vertices(profile: Sequence[int]) -> np.ndarray:
    """All distinct product vertices of the correlation polytope.

    Rows are flattened outer products (C order, matching the coefficient
    tensor) of one +-1 outcome vector per party.  Flipping the signs of two
    parties' vectors leaves the product unchanged, so parties 2..N are
    enumerated with their first outcome fixed to +1; this is a bijection
    onto the distinct vertices, 2^(sum m_j - N + 1) of them.
    """
    profile = tuple(int(m) for m in profile)
    if not profile or any(m < 1 for m in profile):
        raise ValueError(f"bad profile {profile}")
    count = 2 ** (sum(profile) - len(profile) + 1)
    dim = int(np.prod(profile))
    if count * dim > MAX_VERTEX_ENTRIES:
        raise EnumerationLimitError(
            f"profile {profile} has {count} vertices of dimension {dim}; too large"
        )
    parts = [sign_vectors(profile[0])] + [
        sign_vectors(m)[: 2 ** (m - 1)] for m in profile[1:]
    ]
    verts = parts[0]
    for p in parts[1:]:
        outer = verts[:, None, :, None] * p[None, :, None, :]
        verts = outer.reshape(len(verts) * len(p), -1)
    return verts.astype(np.int64)


def vertex_values(ineq: InequalityCoefficients, vertices: np.ndarray) -> np.ndarray:
    """Integer values (scaled by the common denominator) and the denominator."""
    coef, denom = ineq.scaled_integer()
    return np.asarray(vertices) @ coef.ravel(), denom


def saturating_set(ineq: InequalityCoefficients, bound) -> tuple[np.ndarray, np.ndarray]:
    """Vertices attaining +bound and -bound."""
    bound = Fraction(bound)
    verts = enumerate_vertices(ineq.settings_per_party)
    vals, denom = vertex_values(ineq, verts)
    target = bound * denom
    if target.denominator != 1:
        raise ValueError(f"bound {bound} is not attained by any vertex")
    target = int(target)
    pos, neg = verts[vals == target], verts[vals == -target]
    if len(pos) == 0 and len(neg) == 0:
        raise ValueError(f"bound {bound} is not attained by any vertex")
    if np.abs(vals).max() > target:
        raise ValueError(f"bound {bound} is exceeded by some vertex")
    return pos, neg


def integer_rank(rows) -> int:
    """Exact rank of an integer matrix by fraction-free Gaussian elimination."""
    m = np.array(rows, dtype=object)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("need a nonempty 2-D integer matrix")
    m = np.vectorize(int, otypes=[object])(m)
    n_rows, n_cols = m.shape
    r, prev = 0, 1
    for c in range(n_cols):
        if r == n_rows:
            break
        nz = [i for i in range(r, n_rows) if m[i, c] != 0]
        if not nz:
            continue
        p = nz[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        piv = m[r, c]
        below = m[r + 1 :, c:]
        if below.size:
            m[r + 1 :, c:] = (piv * below - np.outer(m[r + 1 :, c], m[r, c:])) // prev
        prev = piv
        r += 1
    return r


def tightness_rank(vertices) -> int:
    """Rank over the rationals of the vertex matrix (rows = vertices)."""
    return integer_rank(vertices)


@dataclass(frozen=True)
class TightnessReport:
    bound: Fraction
    n_saturating_pos: int
    n_saturating_neg: int
    rank: int
    ambient_dim: int

    @property
    def tight(self) -> bool:
        return self.rank == self.ambient_dim


def certify(ineq: InequalityCoefficients) -> TightnessReport:
    """Exhaustive bound plus the rank of the +bound saturating set."""
    bound = classical_bound(ineq).bound
    pos, neg = saturating_set(ineq, bound)
    rank = tightness_rank(pos if len(pos) else neg)
    return TightnessReport(
        bound, len(pos), len(neg), rank, int(np.prod(ineq.settings_per_party))
    )
