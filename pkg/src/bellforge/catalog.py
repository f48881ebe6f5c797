"""Generalized GHZ, W and the four-qubit Psi state, with closed-form tensors."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .criterion import FrameTree, OrthonormalPair, branch_count
from .quantum import CorrelationTensor, QuantumState, correlation_tensor, state_from_amplitudes

log = logging.getLogger(__name__)

CATALOG_TOL = 1e-12


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    state: QuantumState
    analytic_tensor: CorrelationTensor
    parameters: dict = field(default_factory=dict)


def _full_rank_tuples(n: int):
    return itertools.product((1, 2, 3), repeat=n)


def _finish(name, state, rules: dict, params) -> CatalogEntry:
    """Fill the analytic full-rank components and reconcile them with the trace oracle.

    ``rules`` maps full-rank index tuples to closed-form values; every other
    full-rank component is zero by the rules.  Sign disagreements are taken
    from the oracle and logged; magnitude disagreements are errors.
    """
    oracle = correlation_tensor(state)
    comps = np.array(oracle.components)  # marginals are not part of the closed forms
    n = state.n_parties
    for idx in _full_rank_tuples(n):
        analytic = rules.get(idx, 0.0)
        traced = oracle.components[idx]
        if abs(analytic - traced) <= CATALOG_TOL:
            comps[idx] = analytic
        elif abs(abs(analytic) - abs(traced)) <= CATALOG_TOL:
            log.info("%s: sign of T%s taken from trace (%+.6g)", name, idx, traced)
            comps[idx] = -analytic
        else:
            raise AssertionError(
                f"{name}: closed form T{idx} = {analytic} disagrees with trace {traced}"
            )
    return CatalogEntry(name, state, CorrelationTensor(n, comps), dict(params))


def ghz(n: int, alpha: float) -> CatalogEntry:
    """cos(alpha)|0...0> + sin(alpha)|1...1>."""
    if n < 2:
        raise ValueError("GHZ needs n >= 2")
    if not 0 <= alpha <= math.pi / 4 + 1e-12:
        log.warning("alpha=%g outside [0, pi/4]; symmetric to a value inside", alpha)
    amps = np.zeros(2**n)
    amps[0] = math.cos(alpha)
    amps[-1] = math.sin(alpha)
    state = state_from_amplitudes(n, amps)

    c2, s2 = math.cos(2 * alpha), math.sin(2 * alpha)
    rules = {(3,) * n: c2 if n % 2 else 1.0}
    for idx in itertools.product((1, 2), repeat=n):
        ys = idx.count(2)
        if ys % 2 == 0:
            rules[idx] = (-1) ** (ys // 2) * s2
    return _finish(f"ghz:{n}:{alpha}", state, rules, {"n_parties": n, "alpha": alpha})


def w_state(n: int) -> CatalogEntry:
    """Equal superposition of the N single-excitation basis states."""
    if n < 2:
        raise ValueError("W needs n >= 2")
    amps = np.zeros(2**n)
    for j in range(n):
        amps[1 << j] = 1.0
    state = state_from_amplitudes(n, amps)
    # |T_z...z| = 1; two x's (or two y's) with z elsewhere have modulus 2/N.
    # Signs are fixed against the trace oracle in _finish.
    rules = {(3,) * n: 1.0}
    for pair in itertools.combinations(range(n), 2):
        for k in (1, 2):
            idx = [3] * n
            idx[pair[0]] = idx[pair[1]] = k
            rules[tuple(idx)] = 2 / n
    return _finish(f"w:{n}", state, rules, {"n_parties": n})


_X, _Y, _Z = 1, 2, 3
_PSI_COMPONENTS = {
    "xxxx": 1.0, "yyyy": 1.0, "zzzz": 1.0,
    "xxyy": -1 / 3, "xxzz": -1 / 3, "yyxx": -1 / 3,
    "yyzz": -1 / 3, "zzxx": -1 / 3, "zzyy": -1 / 3,
    "xzxz": 2 / 3, "xzzx": 2 / 3, "zxxz": 2 / 3, "zxzx": 2 / 3,
    "xyxy": -2 / 3, "xyyx": -2 / 3, "yxxy": -2 / 3, "yxyx": -2 / 3,
    "yzyz": -2 / 3, "yzzy": -2 / 3, "zyyz": -2 / 3, "zyzy": -2 / 3,
}  # fmt: skip


def psi4_components() -> dict[tuple[int, ...], float]:
    """The 21 nonzero full-rank components of Psi, keyed by index tuples."""
    lookup = {"x": _X, "y": _Y, "z": _Z}
    return {tuple(lookup[c] for c in k): v for k, v in _PSI_COMPONENTS.items()}


def psi4() -> CatalogEntry:
    """sqrt(2/3) |GHZ_4> + sqrt(1/3) |EPR>_12 |EPR>_34."""
    amps = np.zeros(16)
    for bits, a in (("0000", 1), ("1111", 1), ("1010", 0.5), ("0101", 0.5), ("0110", 0.5), ("1001", 0.5)):
        amps[int(bits, 2)] = a
    amps *= math.sqrt(1 / 3)
    state = state_from_amplitudes(4, amps)
    return _finish("psi4", state, psi4_components(), {"n_parties": 4})


def ghz_violation_lhs(n: int, alpha: float) -> float:
    """Criterion sum for GHZ at leaves (x, y) and last observer (x, z).

    2^(N-2) sin^2(2 alpha) + T_{z...z}^2, i.e. cos^2(2 alpha) for odd N; for
    even N the z-branch carries T_{z...z} = 1.
    """
    if n < 3:
        raise ValueError("needs n >= 3")
    tz = math.cos(2 * alpha) if n % 2 else 1.0
    return 2 ** (n - 2) * math.sin(2 * alpha) ** 2 + tz**2


def ghz_violation_axes(n: int) -> FrameTree:
    """Frames at which the GHZ criterion sum equals ``ghz_violation_lhs``.

    Observer N measures (x, z).  Below its x branch every pair is (x, y);
    below its z branch every pair is (z, x), so the z...z component is
    picked up while the mixed x/z components vanish for GHZ.
    """
    if n < 3:
        raise ValueError("needs n >= 3")
    xy, zx = OrthonormalPair.axes("xy"), OrthonormalPair.axes("zx")
    pairs = {n: [OrthonormalPair.axes("xz")]}
    for j in range(1, n):
        count = branch_count(n, j)
        pairs[j] = [xy if b < count // 2 else zx for b in range(count)]
    return FrameTree(n, pairs)


def w_violation_value(n: int) -> float:
    """1 + C(N,2) 4/N^2 = 3 - 2/N, the all-(y,z) frame value for W."""
    if n < 2:
        raise ValueError("needs n >= 2")
    return 3 - 2 / n


def resolve(name: str) -> CatalogEntry:
    """Parse catalog names ``ghz:N:alpha``, ``w:N`` and ``psi4``."""
    parts = name.strip().lower().split(":")
    try:
        if parts[0] == "ghz" and len(parts) == 3:
            return ghz(int(parts[1]), float(parts[2]))
        if parts[0] == "w" and len(parts) == 2:
            return w_state(int(parts[1]))
        if parts == ["psi4"]:
            return psi4()
    except ValueError as exc:
        raise ValueError(f"bad catalog name {name!r}: {exc}") from None
    raise ValueError(f"unknown catalog name {name!r}")
