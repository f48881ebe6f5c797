"""Violation criteria for the multisetting inequalities and the standard baseline.

The multisetting criterion for N qubits is the maximum over local frames of

    sum_{x_N} sum_{x_{N-1}} ... sum_{k,l=1,2} T^2_{k l x_3 ... x_N}

where observer j >= 3 picks an orthonormal pair independently in every
branch of the recursion above it, and the two innermost observers are
maximized in closed form (the two largest squared singular values of the
contracted 3x3 block).  Numerical maxima are lower bounds on the true
maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels, _optim
from .construct import InequalityCoefficients
from .quantum import CorrelationTensor

PAIR_TOL = 1e-10
DEFAULT_RESTARTS = 32


@dataclass(frozen=True)
class OrthonormalPair:
    e1: np.ndarray
    e2: np.ndarray

    def __post_init__(self):
        e1 = np.asarray(self.e1, dtype=float)
        e2 = np.asarray(self.e2, dtype=float)
        if e1.shape != (3,) or e2.shape != (3,):
            raise ValueError("pair vectors must be real 3-vectors")
        if abs(np.linalg.norm(e1) - 1) > PAIR_TOL or abs(np.linalg.norm(e2) - 1) > PAIR_TOL:
            raise ValueError("pair vectors must be unit norm")
        if abs(e1 @ e2) > PAIR_TOL:
            raise ValueError("pair vectors must be orthogonal")
        object.__setattr__(self, "e1", e1)
        object.__setattr__(self, "e2", e2)

    @classmethod
    def axes(cls, name: str) -> OrthonormalPair:
        """Coordinate pair such as ``"xy"`` or ``"yz"``."""
        basis = {"x": np.eye(3)[0], "y": np.eye(3)[1], "z": np.eye(3)[2]}
        return cls(basis[name[0]], basis[name[1]])

    def matrix(self) -> np.ndarray:
        """2x3 matrix with rows e1, e2."""
        return np.vstack([self.e1, self.e2])

    def to_json(self) -> dict:
        return {"e1": [float(x) for x in self.e1], "e2": [float(x) for x in self.e2]}


def branch_count(n: int, party: int) -> int:
    """Number of independent pairs observer ``party`` (1-based) holds in an N-party tree."""
    return 2 ** (n - max(party, 2))


@dataclass(frozen=True)
class FrameTree:
    """Orthonormal pairs per observer, one per branch.

    ``pairs[j]`` (1-based observer j) has ``branch_count(N, j)`` entries.
    Branch b of observer j with choice x in {0, 1} feeds branch 2b + x of
    observer j - 1; observers 1 and 2 share the leaf branches of observer 3.
    """

    n_parties: int
    pairs: dict = field(repr=False)

    def __post_init__(self):
        if self.n_parties < 2:
            raise ValueError("frame trees need at least two observers")
        if set(self.pairs) != set(range(1, self.n_parties + 1)):
            raise ValueError("frame tree needs pairs for every observer")
        for j, lst in self.pairs.items():
            if len(lst) != branch_count(self.n_parties, j):
                raise ValueError(
                    f"observer {j} needs {branch_count(self.n_parties, j)} pairs, got {len(lst)}"
                )
            for p in lst:
                if not isinstance(p, OrthonormalPair):
                    raise TypeError("frame tree entries must be OrthonormalPair")

    @classmethod
    def uniform(cls, n: int, pair: OrthonormalPair, last: OrthonormalPair | None = None):
        """Same pair everywhere, optionally a different one for observer N."""
        pairs = {j: [pair] * branch_count(n, j) for j in range(1, n + 1)}
        if last is not None and n >= 3:
            pairs[n] = [last]
        return cls(n, pairs)

    def to_json(self) -> list[dict]:
        return [
            {"party": j, "branch": b, **p.to_json()}
            for j in sorted(self.pairs)
            for b, p in enumerate(self.pairs[j])
        ]


@dataclass(frozen=True)
class CriterionResult:
    """A criterion value with the frames (or settings) realizing it.

    Squared criteria (multisetting, standard) have violation factor
    sqrt(value); the WWZB value is already a ratio to the classical bound.
    """

    value: float
    frames: object = None
    squared: bool = True

    @property
    def violation_factor(self) -> float:
        return math.sqrt(self.value) if self.squared else self.value

    @property
    def noise_threshold(self) -> float:
        return noise_threshold(self.value) if self.squared else min(1.0, 1 / self.value) if self.value > 0 else 1.0

    @property
    def violated(self) -> bool:
        return self.value > 1

    def to_json(self) -> dict:
        frames = self.frames
        if hasattr(frames, "to_json"):
            frames = frames.to_json()
        return {
            "value": self.value,
            "violation_factor": self.violation_factor,
            "noise_threshold": self.noise_threshold,
            "frames": frames,
        }


def noise_threshold(value: float) -> float:
    """Critical visibility 1/sqrt(value); 1 when there is no violation."""
    if value < 0:
        raise ValueError("criterion value must be nonnegative")
    return 1 / math.sqrt(value) if value > 1 else 1.0


def _top2(s: np.ndarray) -> np.ndarray:
    return s[..., 0] ** 2 + s[..., 1] ** 2


def two_party_criterion(t) -> CriterionResult:
    """Sum of the two largest squared singular values of a 3x3 correlation matrix."""
    t = np.asarray(t, dtype=float)
    if t.shape != (3, 3) or not np.all(np.isfinite(t)):
        raise ValueError("need a finite 3x3 matrix")
    u, s, vh = np.linalg.svd(t)
    frames = FrameTree(
        2,
        {
            1: [OrthonormalPair(u[:, 0], u[:, 1])],
            2: [OrthonormalPair(vh[0], vh[1])],
        },
    )
    return CriterionResult(float(_top2(s)), frames)


def _block(tensor) -> np.ndarray:
    if isinstance(tensor, CorrelationTensor):
        return np.asarray(tensor.full)
    block = np.asarray(tensor, dtype=float)
    if block.shape != (3,) * block.ndim:
        raise ValueError("expected a CorrelationTensor or a 3x...x3 block")
    return block


# --- multisetting criterion -------------------------------------------------


def _n_pair_params(n: int) -> int:
    return 2 ** (n - 2) - 1


def _branch_rotations(params: np.ndarray, n: int) -> dict[int, np.ndarray]:
    """Rotation stacks per observer j >= 3, from flat rotation-vector params."""
    rots = {}
    pos = 0
    for j in range(n, 2, -1):
        count = branch_count(n, j)
        vecs = params[pos : pos + 3 * count].reshape(count, 3)
        rots[j] = np.stack([_optim.rotation_matrix(v) for v in vecs])
        pos += 3 * count
    return rots


def _split_branches(blocks: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Contract the last index of each branch block with its pair.

    ``blocks`` has shape (B, 3, ..., 3), ``pairs`` (B, 3, 2) with the pair as
    columns; returns (2B, 3, ..., 3) with child 2b + x from pair column x.
    """
    out = np.einsum("b...c,bcx->bx...", blocks, pairs)
    return out.reshape((-1,) + blocks.shape[1:-1])


def _leaf_blocks(block: np.ndarray, rots: dict[int, np.ndarray]) -> np.ndarray:
    n = block.ndim
    blocks = block[None]
    for j in range(n, 2, -1):
        blocks = _split_branches(blocks, rots[j][:, :, :2])
    return blocks


def _multisetting_objective(block: np.ndarray, params: np.ndarray) -> float:
    leaves = _leaf_blocks(block, _branch_rotations(params, block.ndim))
    s = np.linalg.svd(leaves, compute_uv=False)
    return float(_top2(s).sum())


def _frames_from_params(block: np.ndarray, params: np.ndarray) -> FrameTree:
    n = block.ndim
    rots = _branch_rotations(params, n)
    pairs = {
        j: [OrthonormalPair(r[:, 0], r[:, 1]) for r in rots[j]] for j in range(3, n + 1)
    }
    leaves = _leaf_blocks(block, rots)
    u, _, vh = np.linalg.svd(leaves)
    pairs[1] = [OrthonormalPair(uu[:, 0], uu[:, 1]) for uu in u]
    pairs[2] = [OrthonormalPair(v[0], v[1]) for v in vh]
    return FrameTree(n, pairs)


def _structured_starts(n_pairs: int, top_first: bool = True) -> list[np.ndarray]:
    """Axis-aligned starts: the first pair in one coordinate plane, the rest in another."""
    starts = []
    planes = list(_optim.PLANE_ROTVECS.values())
    for top in planes:
        for rest in planes:
            x = np.tile(rest, n_pairs)
            if top_first:
                x[:3] = top
            starts.append(x)
    return starts


def multisetting_criterion(
    tensor, restarts: int = DEFAULT_RESTARTS, seed: int = 0
) -> CriterionResult:
    """Maximized multisetting criterion (a certified lower bound on the maximum)."""
    block = _block(tensor)
    n = block.ndim
    if n < 2:
        raise ValueError("the criterion needs at least two parties")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if n == 2:
        return two_party_criterion(block)
    n_pairs = _n_pair_params(n)
    starts = _structured_starts(n_pairs)
    starts += [_optim.random_rotvecs(rng, n_pairs).ravel() for rng in _optim.child_rngs(seed, restarts)]

    flat = np.ascontiguousarray(block, dtype=float).ravel()

    def run(x0):
        return _optim.nelder_mead_max(lambda p: _kernels.multisetting_objective(flat, p), x0)

    value, x = _optim.best_of(run, starts)
    frames = _frames_from_params(block, x)
    # report the value of the returned frames, not the optimizer's internal figure
    return CriterionResult(fixed_axes_value(block, frames), frames)


def fixed_axes_value(tensor, axes: FrameTree) -> float:
    """Criterion sum at the given frames, without any maximization."""
    block = _block(tensor)
    n = block.ndim
    if not isinstance(axes, FrameTree) or axes.n_parties != n:
        raise ValueError(f"need a FrameTree for {n} observers")
    blocks = block[None]
    for j in range(n, 2, -1):
        pairs = np.stack([p.matrix().T for p in axes.pairs[j]])
        blocks = _split_branches(blocks, pairs)
    a = np.stack([p.matrix() for p in axes.pairs[1]])
    b = np.stack([p.matrix() for p in axes.pairs[2]])
    proj = np.einsum("bka,bac,blc->bkl", a, blocks, b)
    return float((proj**2).sum())


# --- standard (single-frame) sufficient condition ---------------------------


def _project_all(block: np.ndarray, mats: Sequence[np.ndarray], skip: int | None = None):
    out = block
    for j, m in enumerate(mats):
        if j == skip:
            continue
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [j])), 0, j)
    return out


def _hooi(block: np.ndarray, mats: list[np.ndarray], max_iter: int = 500, tol: float = 1e-14):
    """Alternating maximization of ||T x_1 P_1 ... x_N P_N||^2 over 2x3 orthonormal P_j.

    Each update is exact: for fixed other factors the best P_j spans the top
    two eigenvectors of G G^T, G the mode-j unfolding of the partial projection.
    """
    n = block.ndim
    value = -1.0
    for _ in range(max_iter):
        for j in range(n):
            g = _project_all(block, mats, skip=j)
            g = np.moveaxis(g, j, 0).reshape(3, -1)
            w, v = np.linalg.eigh(g @ g.T)
            mats[j] = v[:, [2, 1]].T
        new = float((_project_all(block, mats) ** 2).sum())
        if new - value <= tol * max(1.0, abs(new)):
            value = new
            break
        value = new
    return value, mats


def standard_sufficient_criterion(
    tensor, restarts: int = DEFAULT_RESTARTS, seed: int = 0
) -> CriterionResult:
    """Max over one frame per observer of the sum of squared in-frame components."""
    block = _block(tensor)
    n = block.ndim
    if n < 2:
        raise ValueError("the criterion needs at least two parties")
    if n == 2:
        return two_party_criterion(block)
    starts = []
    for rv in _optim.PLANE_ROTVECS.values():
        r = _optim.rotation_matrix(rv)
        starts.append([r[:, :2].T.copy() for _ in range(n)])
    for rng in _optim.child_rngs(seed, restarts):
        rots = [_optim.rotation_matrix(v) for v in _optim.random_rotvecs(rng, n)]
        starts.append([r[:, :2].T.copy() for r in rots])

    value, mats = _optim.best_of(lambda s: _hooi(block, [m.copy() for m in s]), starts)
    frames = FrameTree(n, {j + 1: [OrthonormalPair(m[0], m[1])] * branch_count(n, j + 1) for j, m in enumerate(mats)})
    return CriterionResult(value, frames)


def standard_sufficient_value(tensor, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> float:
    return standard_sufficient_criterion(tensor, restarts, seed).value


# --- see-saw maximization of Bell expressions -------------------------------


def _contract_settings(coef: np.ndarray, settings: Sequence[np.ndarray], skip: int | None = None):
    """Replace setting index j of ``coef`` by a Bloch index via settings[j] (m_j x 3)."""
    out = coef
    for j, a in enumerate(settings):
        if j == skip:
            continue
        out = np.moveaxis(np.tensordot(out, a, axes=([j], [0])), -1, j)
    return out


def correlators(block: np.ndarray, settings: Sequence[np.ndarray]) -> np.ndarray:
    """E[i1..iN] for every combination of setting vectors (settings[j] is m_j x 3)."""
    out = block
    for j, a in enumerate(settings):
        out = np.moveaxis(np.tensordot(out, a, axes=([j], [1])), -1, j)
    return out


def bell_value(coef: np.ndarray, block: np.ndarray, settings: Sequence[np.ndarray]) -> float:
    """sum_i C_i E(a_{1,i1}, ..., a_{N,iN}) for unit setting vectors."""
    return float(np.sum(_contract_settings(coef, settings) * block))


def _seesaw_sweep(coef, block, settings):
    n = block.ndim
    axes = list(range(n))
    for j in range(n):
        z = _contract_settings(coef, settings, skip=j)
        others = [k for k in axes if k != j]
        d = np.tensordot(z, block, axes=(others, others))  # (m_j, 3)
        norms = np.linalg.norm(d, axis=1, keepdims=True)
        keep = norms[:, 0] > 1e-300
        settings[j][keep] = d[keep] / norms[keep]
    return bell_value(coef, block, settings)


def _seesaw(coef, block, settings, max_iter=5000, tol=1e-11):
    value = bell_value(coef, block, settings)
    for _ in range(max_iter):
        new = _seesaw_sweep(coef, block, settings)
        if new - value <= tol * max(1.0, abs(new)):
            value = max(value, new)
            break
        value = new
    return value, settings


def _check_parties(ineq: InequalityCoefficients, block: np.ndarray):
    if ineq.n_parties != block.ndim:
        raise ValueError(
            f"inequality has {ineq.n_parties} parties but the tensor has {block.ndim}"
        )


@dataclass(frozen=True)
class QuantumMaxResult:
    value: float
    settings: list  # per party, an (m_j, 3) array of unit Bloch vectors
    ratio: float  # value / classical bound

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "ratio": self.ratio,
            "settings": [[[float(x) for x in v] for v in a] for a in self.settings],
        }


def quantum_max(
    ineq: InequalityCoefficients, tensor, restarts: int = DEFAULT_RESTARTS, seed: int = 0
) -> QuantumMaxResult:
    """Maximum of |Bell expression| over projective qubit settings (lower bound).

    Local search is a see-saw: with all other settings fixed the expression
    is linear in each of observer j's vectors, which are then set to their
    normalized gradients.  ``ratio`` is relative to the declared bound.
    """
    block = _block(tensor)
    _check_parties(ineq, block)
    coef = ineq.dense_float()
    profile = ineq.settings_per_party

    def run(rng):
        settings = [_optim.random_unit_vectors(rng, (m,)) for m in profile]
        return _seesaw(coef, block, settings)

    value, settings = _optim.best_of(run, _optim.child_rngs(seed, restarts))
    # flipping all of observer 1's vectors negates the expression
    value = abs(value)
    return QuantumMaxResult(value, settings, value / float(ineq.declared_bound))


# --- standard two-setting (WWZB) inequalities -------------------------------

_WWZB_H = np.array([[1.0, 1.0], [-1.0, 1.0]])  # rows s = +1, -1; columns setting 1, 2


def _wwzb_terms(block: np.ndarray, settings: Sequence[np.ndarray]) -> np.ndarray:
    """F_s = sum_k prod_j s_j^{k_j} E_k for every sign tuple s."""
    n = block.ndim
    f = correlators(block, settings)
    for j in range(n):
        f = np.moveaxis(np.tensordot(_WWZB_H, f, axes=([1], [j])), 0, j)
    return f


def wwzb_value(block: np.ndarray, settings: Sequence[np.ndarray]) -> float:
    """2^-N sum_s |F_s| for two settings per observer."""
    return float(np.abs(_wwzb_terms(block, settings)).sum() / 2**block.ndim)


def _wwzb_coef(signs: np.ndarray) -> np.ndarray:
    """Correlator coefficients of the WWZB inequality for sign function S(s)."""
    c = signs
    for j in range(signs.ndim):
        c = np.moveaxis(np.tensordot(_WWZB_H.T, c, axes=([1], [j])), 0, j)
    return c / 2**signs.ndim


def wwzb_criterion(tensor, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> CriterionResult:
    """Largest violation ratio of any standard two-setting correlation inequality.

    See-saw over both the sign function S(s) (set to sign of each term) and
    the settings; value > 1 iff some WWZB inequality is violated.
    """
    block = _block(tensor)
    n = block.ndim
    if n < 2:
        raise ValueError("need at least two parties")

    def run(rng):
        settings = [_optim.random_unit_vectors(rng, (2,)) for _ in range(n)]
        value = wwzb_value(block, settings)
        for _ in range(2000):
            signs = np.where(_wwzb_terms(block, settings) >= 0, 1.0, -1.0)
            coef = _wwzb_coef(signs)
            _, settings = _seesaw(coef, block, settings, max_iter=1)
            new = wwzb_value(block, settings)
            if new - value <= 1e-13 * max(1.0, new):
                value = max(value, new)
                break
            value = new
        return value, settings

    value, settings = _optim.best_of(run, _optim.child_rngs(seed, restarts))
    frames = [
        {"party": j + 1, "settings": [[float(x) for x in v] for v in a]}
        for j, a in enumerate(settings)
    ]
    return CriterionResult(value, frames, squared=False)


def wwzb_max(tensor, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> float:
    return wwzb_criterion(tensor, restarts, seed).value
