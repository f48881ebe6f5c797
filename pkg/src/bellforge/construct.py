"""Construction of the multisetting inequality families.

An N-party identity combines two (N-1)-party identities with a sign function
and the two settings of the last observer::

    X_N = sum_{k,l} S(k,l) (X_L + (-1)^k X_R) (P_a + (-1)^l P_b)

with the two-party base case built from the settings of the first two
observers.  For +-1 outcomes X_N = +-4^(N-1).  Setting indices are 1-based
throughout, as is the setting profile (2^(N-1), 2^(N-1), 2^(N-2), ..., 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

# dense coefficient tensors larger than this many entries are refused
MAX_DENSE_ENTRIES = 2**24


class EnumerationLimitError(ValueError):
    """Raised when a construction or enumeration exceeds its size guard."""

# order in which the four values of a sign function are stored
SIGN_KEYS = ((1, 1), (1, 2), (2, 1), (2, 2))


@dataclass(frozen=True)
class SignFunction:
    """A map {1,2}^2 -> {+1,-1}, stored in SIGN_KEYS order."""

    values: tuple[int, int, int, int]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if len(vals) != 4 or any(v not in (1, -1) for v in vals):
            raise ValueError(f"sign function needs four +-1 values, got {self.values!r}")
        object.__setattr__(self, "values", vals)

    def __call__(self, k: int, l: int) -> int:
        return self.values[SIGN_KEYS.index((k, l))]

    @classmethod
    def from_index(cls, index: int) -> SignFunction:
        """Lexicographic index 0..15; bit set means -1, most significant bit is S(1,1)."""
        if not 0 <= index < 16:
            raise ValueError(f"sign-function index must be 0..15, got {index}")
        return cls(tuple(-1 if (index >> (3 - p)) & 1 else 1 for p in range(4)))

    @classmethod
    def from_mapping(cls, m: Mapping[tuple[int, int], int]) -> SignFunction:
        if set(m) != set(SIGN_KEYS):
            raise ValueError("sign function must define exactly (1,1),(1,2),(2,1),(2,2)")
        return cls(tuple(m[k] for k in SIGN_KEYS))

    @property
    def index(self) -> int:
        return sum(1 << (3 - p) for p, v in enumerate(self.values) if v == -1)

    def as_matrix(self) -> np.ndarray:
        return np.array(self.values, dtype=np.int64).reshape(2, 2)


def all_sign_functions() -> list[SignFunction]:
    return [SignFunction.from_index(i) for i in range(16)]


def is_factorable(s: SignFunction) -> bool:
    """True iff S(k,l) = s1(k) s2(l) for some +-1 valued s1, s2."""
    return int(np.prod(s.values)) == 1


@dataclass(frozen=True)
class SignTree:
    """Binary recursion tree of sign functions.

    A leaf (no children) combines the first two observers; an internal node
    at depth d below the root combines its two subtrees with observer N - d.
    """

    sign: SignFunction
    left: SignTree | None = None
    right: SignTree | None = None

    def __post_init__(self):
        if (self.left is None) != (self.right is None):
            raise ValueError("sign tree nodes need either zero or two children")
        if self.left is not None and self.left.n_parties != self.right.n_parties:
            raise ValueError("sign tree is unbalanced")

    @property
    def n_parties(self) -> int:
        return 2 if self.left is None else self.left.n_parties + 1

    def functions(self) -> list[SignFunction]:
        """Preorder list of all sign functions in the tree."""
        if self.left is None:
            return [self.sign]
        return [self.sign, *self.left.functions(), *self.right.functions()]

    @classmethod
    def uniform(cls, n: int, leaf: SignFunction, inner: SignFunction | None = None) -> SignTree:
        inner = leaf if inner is None else inner
        if n < 2:
            raise ValueError("sign trees need at least two parties")
        if n == 2:
            return cls(leaf)
        sub = cls.uniform(n - 1, leaf, inner)
        return cls(inner, sub, sub)

    @classmethod
    def from_functions(cls, n: int, funcs: Sequence[SignFunction]) -> SignTree:
        """Inverse of :meth:`functions` (preorder)."""
        it = iter(funcs)

        def build(m):
            s = next(it)
            if m == 2:
                return cls(s)
            left = build(m - 1)
            return cls(s, left, build(m - 1))

        try:
            tree = build(n)
        except StopIteration:
            raise ValueError(f"too few sign functions for {n} parties") from None
        if next(it, None) is not None:
            raise ValueError(f"too many sign functions for {n} parties")
        return tree


def setting_profile(n: int) -> tuple[int, ...]:
    """(2^(N-1), 2^(N-1), 2^(N-2), ..., 2)."""
    if n < 2:
        raise ValueError("at least two parties are needed")
    return (2 ** (n - 1), 2 ** (n - 1)) + tuple(2 ** (n - j + 1) for j in range(3, n + 1))


@dataclass(frozen=True)
class InequalityCoefficients:
    """Sparse coefficients on correlators E_{i1..iN} plus a declared classical bound.

    ``terms`` maps 1-based setting tuples to exact rational coefficients;
    zero coefficients are dropped.
    """

    n_parties: int
    settings_per_party: tuple[int, ...]
    terms: dict = field(repr=False)
    declared_bound: Fraction = Fraction(0)

    def __post_init__(self):
        profile = tuple(int(m) for m in self.settings_per_party)
        if len(profile) != self.n_parties or any(m < 1 for m in profile):
            raise ValueError(f"bad setting profile {profile} for {self.n_parties} parties")
        terms = {}
        for key, c in self.terms.items():
            key = tuple(int(i) for i in key)
            if len(key) != self.n_parties or any(
                not 1 <= i <= m for i, m in zip(key, profile)
            ):
                raise ValueError(f"setting tuple {key} outside profile {profile}")
            c = Fraction(c)
            if c:
                terms[key] = terms.get(key, Fraction(0)) + c
        terms = {k: v for k, v in sorted(terms.items()) if v}
        if not terms:
            raise ValueError("inequality has no nonzero coefficient")
        bound = Fraction(self.declared_bound)
        if bound <= 0:
            raise ValueError("declared bound must be positive")
        object.__setattr__(self, "settings_per_party", profile)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "declared_bound", bound)

    def dense(self) -> np.ndarray:
        """Coefficient tensor of shape ``settings_per_party`` (object dtype, Fractions)."""
        arr = np.zeros(self.settings_per_party, dtype=object)
        arr[...] = Fraction(0)
        for key, c in self.terms.items():
            arr[tuple(i - 1 for i in key)] = c
        return arr

    def dense_float(self) -> np.ndarray:
        arr = np.zeros(self.settings_per_party)
        for key, c in self.terms.items():
            arr[tuple(i - 1 for i in key)] = float(c)
        return arr

    def scaled_integer(self) -> tuple[np.ndarray, int]:
        """Integer coefficient tensor ``C`` and denominator ``d`` with coefficients = C / d."""
        d = math.lcm(*(c.denominator for c in self.terms.values()))
        big = int(max(abs(c) * d for c in self.terms.values())) * len(self.terms)
        arr = np.zeros(self.settings_per_party, dtype=np.int64 if big < 2**62 else object)
        for key, c in self.terms.items():
            arr[tuple(i - 1 for i in key)] = int(c * d)
        return arr, d

    @classmethod
    def from_dense(cls, arr, declared_bound) -> InequalityCoefficients:
        arr = np.asarray(arr)
        terms = {tuple(int(i) + 1 for i in idx): Fraction(arr[idx]) for idx in zip(*np.nonzero(arr))}
        return cls(arr.ndim, arr.shape, terms, declared_bound)

    def evaluate(self, strategy: Sequence[Sequence[int]]) -> Fraction:
        """Value of the Bell expression for one deterministic strategy."""
        total = Fraction(0)
        for key, c in self.terms.items():
            prod = 1
            for outcomes, i in zip(strategy, key):
                prod *= outcomes[i - 1]
            total += c * prod
        return total


def _check_strategy(strategy, profile):
    if len(strategy) != len(profile):
        raise ValueError("strategy must give outcomes for every party")
    out = []
    for outs, m in zip(strategy, profile):
        outs = [int(x) for x in outs]
        if len(outs) != m:
            raise ValueError(f"strategy needs {m} outcomes for a party, got {len(outs)}")
        if any(x not in (1, -1) for x in outs):
            raise ValueError("strategy outcomes must be +-1")
        out.append(outs)
    return out


def identity_value(strategy: Sequence[Sequence[int]], signs: SignTree) -> int:
    """Evaluate the recursive sign-function identity on +-1 outcomes.

    ``strategy[j]`` lists the outcomes of observer j+1 for each of its
    settings in the profile (2^(N-1), 2^(N-1), ..., 2).  The result is
    always +-4^(N-1).
    """
    if not isinstance(signs, SignTree):
        raise TypeError("signs must be a SignTree")
    n = signs.n_parties
    if len(strategy) != n:
        raise ValueError(f"sign tree describes {n} parties, strategy has {len(strategy)}")
    outs = _check_strategy(strategy, setting_profile(n))

    def node(tree: SignTree, m: int, offsets: tuple[int, ...]) -> int:
        s = tree.sign
        if m == 2:
            a1, a2 = outs[0][offsets[0]], outs[0][offsets[0] + 1]
            b1, b2 = outs[1][offsets[1]], outs[1][offsets[1] + 1]
            return sum(
                s(k, l) * (a1 + (-1) ** k * a2) * (b1 + (-1) ** l * b2)
                for k in (1, 2)
                for l in (1, 2)
            )
        sub = setting_profile(m - 1)
        left = node(tree.left, m - 1, offsets[: m - 1])
        right = node(
            tree.right, m - 1, tuple(o + p for o, p in zip(offsets[: m - 1], sub))
        )
        p = outs[m - 1]
        pa, pb = p[offsets[m - 1]], p[offsets[m - 1] + 1]
        return sum(
            s(k, l) * (left + (-1) ** k * right) * (pa + (-1) ** l * pb)
            for k in (1, 2)
            for l in (1, 2)
        )

    return node(signs, n, (0,) * n)


def node_weights(s: SignFunction) -> np.ndarray:
    """Expand sum_{k,l} S(k,l) (U1 + (-1)^k U2) (V1 + (-1)^l V2).

    Returns w with w[x, y] the coefficient of U_{x+1} V_{y+1}.
    """
    m = s.as_matrix()
    h = np.array([[1, -1], [1, 1]], dtype=np.int64)  # h[k-1] = (1, (-1)^k)
    # w[i, j] = sum_{k,l} S(k,l) h[k, i] h[l, j]
    return h.T @ m @ h


def identity_tensor(signs: SignTree) -> np.ndarray:
    """Integer coefficient tensor of the identity over the full setting profile."""
    n = signs.n_parties
    size = math.prod(setting_profile(n))
    if size > MAX_DENSE_ENTRIES:
        raise EnumerationLimitError(
            f"{n}-party coefficient tensor has {size} entries; limit is {MAX_DENSE_ENTRIES}"
        )

    def build(tree: SignTree, m: int) -> np.ndarray:
        w = node_weights(tree.sign)
        profile = setting_profile(m)
        out = np.zeros(profile, dtype=np.int64)
        if m == 2:
            out[:2, :2] = w
            return out
        sub = setting_profile(m - 1)
        left = build(tree.left, m - 1)
        right = build(tree.right, m - 1)
        lsl = tuple(slice(0, p) for p in sub)
        rsl = tuple(slice(p, 2 * p) for p in sub)
        for x, block, sl in ((0, left, lsl), (1, right, rsl)):
            for y in range(2):
                out[sl + (y,)] += w[x, y] * block
        return out

    return build(signs, n)


def _tensor_to_terms(arr: np.ndarray, scale: int = 1) -> dict:
    return {
        tuple(int(i) + 1 for i in idx): Fraction(int(arr[idx]), scale)
        for idx in zip(*np.nonzero(arr))
    }


def identity_inequality(signs: SignTree) -> InequalityCoefficients:
    """Identity-normalized inequality, declared bound 4^(N-1)."""
    n = signs.n_parties
    arr = identity_tensor(signs)
    return InequalityCoefficients(n, setting_profile(n), _tensor_to_terms(arr), 4 ** (n - 1))


def _find_sign(target: np.ndarray) -> SignFunction:
    for s in all_sign_functions():
        if np.array_equal(node_weights(s), target):
            return s
    raise AssertionError(f"no sign function realizes {target.tolist()}")


# Non-factorable functions reproducing the CHSH-type combination
#   2 [U1 (V1 + V2) + U2 (V1 - V2)]
# at every node of the tree; both base and inner nodes use the same pattern.
CANONICAL_SIGN = _find_sign(np.array([[2, 2], [2, -2]]))


def canonical_tree(n: int) -> SignTree:
    return SignTree.uniform(n, CANONICAL_SIGN)


def generating_inequality(n: int) -> InequalityCoefficients:
    """The generating inequality for N parties.

    N=2 is CHSH (bound 2) and N=3 the 4x4x2 inequality with +-1
    coefficients (bound 4).  For N >= 4 the top combination
    X_L (P_1 + P_2) + X_R (P_1 - P_2) is applied to identity-normalized
    (N-1)-party blocks, giving bound 2 * 4^(N-2) (32 for N=4).
    """
    if n < 2:
        raise ValueError("generating inequality needs n >= 2")
    arr = identity_tensor(canonical_tree(n))
    scale = {2: 2, 3: 4}.get(n, 2)
    bound = Fraction(4 ** (n - 1), scale)
    return InequalityCoefficients(n, setting_profile(n), _tensor_to_terms(arr, scale), bound)


def family_442(signs: Sequence[SignFunction]) -> InequalityCoefficients:
    """One of the 2^12 identity-form 4x4x2 inequalities (bound 16).

    ``signs`` is (S, S', S''): S combines the two blocks with the third
    observer, S' acts on settings 1,2 and S'' on settings 3,4 of the first
    two observers.
    """
    s, s1, s2 = signs
    tree = SignTree(s, SignTree(s1), SignTree(s2))
    return identity_inequality(tree)


def family_signs(index: int) -> tuple[SignFunction, SignFunction, SignFunction]:
    """Sign-function triple of family member ``index`` (lexicographic, 0..4095)."""
    if not 0 <= index < 4096:
        raise ValueError(f"family index must be 0..4095, got {index}")
    return (
        SignFunction.from_index(index >> 8),
        SignFunction.from_index((index >> 4) & 15),
        SignFunction.from_index(index & 15),
    )


def iter_family_442() -> Iterator[tuple[int, InequalityCoefficients]]:
    for index in range(4096):
        yield index, family_442(family_signs(index))


def _normalize_merge(merge_map, profile):
    if merge_map is None:
        merge_map = {}
    if isinstance(merge_map, Mapping):
        per_party = [merge_map.get(j, {}) for j in range(len(profile))]
    else:
        per_party = list(merge_map)
        if len(per_party) != len(profile):
            raise ValueError("merge map must have one entry per party")
    full = []
    for j, (m, mp) in enumerate(zip(profile, per_party)):
        mp = dict(mp or {})
        for src, dst in mp.items():
            if not (1 <= src <= m and 1 <= dst <= m):
                raise ValueError(f"party {j + 1}: merge {src}->{dst} outside 1..{m}")
        rep = {}
        for i in range(1, m + 1):
            r = i
            seen = set()
            while r in mp and mp[r] != r:
                if r in seen:
                    raise ValueError(f"party {j + 1}: cyclic merge map")
                seen.add(r)
                r = mp[r]
            rep[i] = r
        full.append(rep)
    return full


def identify_settings(
    ineq: InequalityCoefficients, merge_map, compact: bool = True
) -> InequalityCoefficients:
    """Make settings equal by summing coefficients of merged settings.

    ``merge_map`` is either a sequence with one ``{setting: representative}``
    dict per party or a dict keyed by 0-based party index; unlisted settings
    map to themselves.  With ``compact`` the surviving representatives are
    renumbered 1..m'; otherwise the original profile is kept and merged
    coefficients sit on the representative's index.  The classical bound is
    recomputed by exhaustive enumeration.
    """
    from .lroracle import classical_bound

    reps = _normalize_merge(merge_map, ineq.settings_per_party)
    if compact:
        relabel = []
        for rep in reps:
            kept = sorted(set(rep.values()))
            new = {r: i + 1 for i, r in enumerate(kept)}
            relabel.append({i: new[r] for i, r in rep.items()})
        profile = tuple(len(set(rep.values())) for rep in reps)
    else:
        relabel = reps
        profile = ineq.settings_per_party
    terms: dict = {}
    for key, c in ineq.terms.items():
        new_key = tuple(rl[i] for rl, i in zip(relabel, key))
        terms[new_key] = terms.get(new_key, Fraction(0)) + c
    if not any(terms.values()):
        raise ValueError("all coefficients cancel after merging")
    # placeholder bound; replaced below once the tensor exists
    merged = InequalityCoefficients(ineq.n_parties, profile, terms, 1)
    bound = classical_bound(merged).bound
    return InequalityCoefficients(ineq.n_parties, profile, merged.terms, bound)


def flip_signs(ineq: InequalityCoefficients, flips: Sequence[Sequence[int]]) -> InequalityCoefficients:
    """Apply outcome relabelings X_i -> f_i X_i (f_i = +-1) per party and setting."""
    terms = {}
    for key, c in ineq.terms.items():
        f = 1
        for fl, i in zip(flips, key):
            f *= fl[i - 1]
        terms[key] = c * f
    return InequalityCoefficients(ineq.n_parties, ineq.settings_per_party, terms, ineq.declared_bound)


def _solve_gf2(rows: list[tuple[int, int]], n_vars: int):
    """Solve a linear system over GF(2); rows are (variable bitmask, rhs bit)."""
    pivots: dict[int, tuple[int, int]] = {}
    for mask, rhs in rows:
        for bit, (pmask, prhs) in pivots.items():
            if mask >> bit & 1:
                mask ^= pmask
                rhs ^= prhs
        if mask == 0:
            if rhs:
                return None
            continue
        bit = mask.bit_length() - 1
        for b, (pmask, prhs) in list(pivots.items()):
            if pmask >> bit & 1:
                pivots[b] = (pmask ^ mask, prhs ^ rhs)
        pivots[bit] = (mask, rhs)
    # free variables are zero; each pivot row then fixes its leading variable
    return [pivots[b][1] if b in pivots else 0 for b in range(n_vars)]


def find_sign_flips(a: InequalityCoefficients, b: InequalityCoefficients, scale=1):
    """Per-setting sign flips f with ``flip_signs(b, f) == scale * a``, or None."""
    if a.settings_per_party != b.settings_per_party or set(a.terms) != set(b.terms):
        return None
    scale = Fraction(scale)
    offsets = np.concatenate([[0], np.cumsum(a.settings_per_party)]).astype(int)
    rows = []
    for key, c in a.terms.items():
        r = scale * c / b.terms[key]
        if r not in (1, -1):
            return None
        mask = 0
        for j, i in enumerate(key):
            mask |= 1 << int(offsets[j] + i - 1)
        rows.append((mask, int(r == -1)))
    bits = _solve_gf2(rows, int(offsets[-1]))
    if bits is None:
        return None
    return [
        [-1 if bits[offsets[j] + i] else 1 for i in range(m)]
        for j, m in enumerate(a.settings_per_party)
    ]


def reduce_member(signs: Sequence[SignFunction]):
    """Rewrite a 4x4x2 member with factorable sign functions.

    A factorable node S(k,l) = s1(k) s2(l) equals a non-factorable node with
    the second operand's two settings made equal.  Returns the all
    non-factorable triple and the merge map (0-based party -> {setting: rep})
    such that ``identify_settings(family_442(triple), merge, compact=False)``
    reproduces ``family_442(signs)``.
    """
    s, s1, s2 = signs
    # (node, party whose pair is merged, first setting of that pair)
    nodes = [(s, 2, 1), (s1, 1, 1), (s2, 1, 3)]
    replaced = []
    merge: dict[int, dict[int, int]] = {}
    for f, party, first in nodes:
        if not is_factorable(f):
            replaced.append(f)
            continue
        m = f.as_matrix()
        # s1(k) s2(l) with s2(1) = +1 after absorbing the sign into s1
        col = m[:, 0]
        s2_2 = int(m[0, 1] * m[0, 0])
        if s2_2 == 1:
            rep, sigma = first, 1
        else:
            rep, sigma = first + 1, -1
        # non-factorable N with N(k,2) = sigma s1(k) and N(1,1) = N(1,2), N(2,1) = -N(2,2)
        n12, n22 = int(sigma * col[0]), int(sigma * col[1])
        nf = SignFunction((n12, n12, -n22, n22))
        assert not is_factorable(nf)
        replaced.append(nf)
        other = first if rep == first + 1 else first + 1
        merge.setdefault(party, {})[other] = rep
    return tuple(replaced), merge


def flip_class_key(ineq: InequalityCoefficients) -> tuple:
    """Invariant of ``ineq`` under per-setting outcome flips.

    Two inequalities get the same key iff one is a sign-flip image of the
    other: the support and magnitudes must agree, and the sign pattern is
    reduced modulo the GF(2) span of the single-setting flips.
    """
    keys = list(ineq.terms)
    # each setting flip toggles the signs of the terms that use it
    gens = []
    for j, m in enumerate(ineq.settings_per_party):
        for i in range(1, m + 1):
            gens.append(sum(1 << t for t, k in enumerate(keys) if k[j] == i))
    basis: dict[int, int] = {}
    for g in gens:
        for bit in sorted(basis, reverse=True):
            if g >> bit & 1:
                g ^= basis[bit]
        if g:
            basis[g.bit_length() - 1] = g
    pattern = sum(1 << t for t, k in enumerate(keys) if ineq.terms[k] < 0)
    for bit in sorted(basis, reverse=True):
        if pattern >> bit & 1:
            pattern ^= basis[bit]
    magnitudes = tuple((k, abs(ineq.terms[k])) for k in keys)
    return ineq.settings_per_party, magnitudes, pattern


def count_flip_classes(inequalities) -> int:
    """Number of distinct inequalities up to outcome flips."""
    return len({flip_class_key(q) for q in inequalities})
