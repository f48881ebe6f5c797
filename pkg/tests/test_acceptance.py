"""Acceptance criteria 1-9.

Each test carries ``@pytest.mark.acceptance(k)``; the conftest summary prints
one PASS/FAIL line per criterion at the end of the run.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from bellforge import catalog
from bellforge.construct import (
    SignTree,
    all_sign_functions,
    family_442,
    family_signs,
    find_sign_flips,
    generating_inequality,
    identify_settings,
    identity_value,
    is_factorable,
    iter_family_442,
    reduce_member,
    setting_profile,
)
from bellforge.criterion import (
    FrameTree,
    OrthonormalPair,
    fixed_axes_value,
    multisetting_criterion,
    noise_threshold,
    quantum_max,
    two_party_criterion,
    wwzb_max,
)
from bellforge.lroracle import certify, classical_bound, enumerate_vertices, saturating_set, tightness_rank
from bellforge.quantum import (
    add_white_noise,
    bloch_rotation,
    correlation_tensor,
    rotate_block,
    state_from_amplitudes,
)

from .conftest import random_pure_state

ALPHA_GRID = [(i + 1) * (math.pi / 4) / 20 for i in range(20)]
YZ = OrthonormalPair.axes("yz")


def epr():
    """(|01> + |10>) / sqrt(2)."""
    return state_from_amplitudes(2, [0, 1, 1, 0])


# --- 1 ------------------------------------------------------------------------


@pytest.mark.acceptance(1)
def test_bound_chsh():
    assert classical_bound(generating_inequality(2)).bound == 2


@pytest.mark.acceptance(1)
def test_bound_generating_three_parties():
    assert classical_bound(generating_inequality(3)).bound == 4


@pytest.mark.acceptance(1)
def test_bound_every_family_member():
    bounds = {classical_bound(q).bound for _, q in iter_family_442()}
    assert bounds == {Fraction(16)}


@pytest.mark.acceptance(1)
def test_bound_generating_four_parties():
    res = classical_bound(generating_inequality(4))
    assert res.n_strategies <= 2**22
    assert res.bound == 32


# --- 2 ------------------------------------------------------------------------


@pytest.mark.acceptance(2)
def test_vertex_count_442():
    verts = enumerate_vertices((4, 4, 2))
    assert len(verts) == 256
    assert len(np.unique(verts, axis=0)) == 256


@pytest.mark.acceptance(2)
def test_sampled_members_tight():
    rng = np.random.default_rng(2)
    for index in rng.choice(4096, size=128, replace=False):
        rep = certify(family_442(family_signs(int(index))))
        assert (rep.bound, rep.n_saturating_pos, rep.n_saturating_neg) == (16, 128, 128), index
        assert rep.rank == 32 == rep.ambient_dim, index


@pytest.mark.acceptance(2)
def test_chsh_rank():
    chsh = generating_inequality(2)
    pos, _ = saturating_set(chsh, 2)
    assert tightness_rank(pos) == 4


# --- 3 ------------------------------------------------------------------------


@pytest.mark.acceptance(3)
def test_family_enumerates_completely():
    seen = set()
    count = 0
    for index, _ in iter_family_442():
        seen.add(tuple(f.index for f in family_signs(index)))
        count += 1
    assert count == 4096 == len(seen) == (2**4) ** 3


@pytest.mark.acceptance(3)
def test_non_factorable_members_in_generating_orbit():
    gen = generating_inequality(3)
    nf = [s for s in all_sign_functions() if not is_factorable(s)]
    for triple in ((a, b, c) for a in nf for b in nf for c in nf):
        assert find_sign_flips(gen, family_442(triple), scale=4) is not None


@pytest.mark.acceptance(3)
def test_factorable_members_reduce():
    gen = generating_inequality(3)
    reduced = 0
    for index, member in iter_family_442():
        signs = family_signs(index)
        if all(not is_factorable(s) for s in signs):
            continue
        triple, merge = reduce_member(signs)
        base = family_442(triple)
        assert find_sign_flips(gen, base, scale=4) is not None
        image = identify_settings(base, merge, compact=False)
        assert image.terms == member.terms, index
        lower = identify_settings(base, merge)
        assert math.prod(lower.settings_per_party) < 32
        reduced += 1
    assert reduced == 4096 - 8**3


# --- 4 ------------------------------------------------------------------------


@pytest.mark.acceptance(4)
def test_epr_two_party_value():
    t = correlation_tensor(epr()).full
    assert np.allclose(t, np.diag([1.0, 1.0, -1.0]), atol=1e-15)
    assert two_party_criterion(t).value == pytest.approx(2, abs=1e-12)
    assert two_party_criterion(np.diag([1.0, 1.0, -1.0])).value == 2


@pytest.mark.acceptance(4)
def test_chsh_tsirelson():
    res = quantum_max(generating_inequality(2), correlation_tensor(epr()), restarts=8)
    assert abs(res.value - 2 * math.sqrt(2)) <= 1e-5


@pytest.mark.acceptance(4)
def test_product_states_not_violating():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a, b = (rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(2))
        state = state_from_amplitudes(2, np.kron(a, b))
        assert two_party_criterion(correlation_tensor(state).full).value <= 1 + 1e-9


# --- 5 ------------------------------------------------------------------------


@pytest.mark.acceptance(5)
@pytest.mark.parametrize("n", [3, 4, 5])
def test_ghz_closed_form_and_optimizer(n):
    restarts = 4 if n < 5 else 1
    for alpha in ALPHA_GRID:
        t = catalog.ghz(n, alpha).analytic_tensor
        lhs = catalog.ghz_violation_lhs(n, alpha)
        assert abs(fixed_axes_value(t, catalog.ghz_violation_axes(n)) - lhs) <= 1e-10, alpha
        value = multisetting_criterion(t, restarts=restarts).value
        assert value >= lhs - 1e-6, alpha
        if n == 3:
            assert value > 1, alpha


@pytest.mark.acceptance(5)
def test_ghz_standard_inequalities_satisfied():
    points = [a for a in ALPHA_GRID if math.sin(2 * a) <= 0.5 + 1e-15]
    assert points
    for alpha in points:
        assert wwzb_max(catalog.ghz(3, alpha).analytic_tensor, restarts=8) <= 1 + 1e-3


# --- 6 ------------------------------------------------------------------------


@pytest.mark.acceptance(6)
@pytest.mark.parametrize("n", [3, 4, 5])
def test_w_threshold(n):
    t = catalog.w_state(n).analytic_tensor
    exact = 3 - 2 / n
    assert abs(fixed_axes_value(t, FrameTree.uniform(n, YZ)) - exact) <= 1e-10
    value = multisetting_criterion(t, restarts=4 if n < 5 else 1).value
    assert noise_threshold(value) <= 1 / math.sqrt(exact) + 1e-6


# --- 7 ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def psi():
    return catalog.psi4()


@pytest.mark.acceptance(7)
def test_psi_components(psi):
    traced = correlation_tensor(psi.state)
    listed = catalog.psi4_components()
    assert len(listed) == 21
    for idx in np.ndindex(3, 3, 3, 3):
        key = tuple(i + 1 for i in idx)
        assert abs(traced[key] - listed.get(key, 0.0)) <= 1e-12, key


@pytest.mark.acceptance(7)
def test_psi_xy_sum(psi):
    xy = psi.analytic_tensor.full[:2, :2, :2, :2]
    assert abs((xy**2).sum() - 4) <= 1e-12


@pytest.mark.acceptance(7)
def test_psi_noise_threshold(psi):
    res = multisetting_criterion(psi.analytic_tensor)
    assert res.noise_threshold <= 0.5 + 1e-6


@pytest.mark.acceptance(7)
def test_psi_generating_violation(psi):
    res = quantum_max(generating_inequality(4), psi.analytic_tensor, restarts=16)
    assert res.value / 32 >= 2 - 1e-3


@pytest.mark.acceptance(7)
def test_psi_standard_inequalities(psi):
    value = wwzb_max(psi.analytic_tensor)
    assert abs(value - 1 / 0.5303) <= 0.02 * (1 / 0.5303)


# --- 8 ------------------------------------------------------------------------


@pytest.mark.acceptance(8)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_quantum_max_matches_criterion(n):
    gen = generating_inequality(n)
    bound = float(classical_bound(gen).bound)
    rng = np.random.default_rng(800 + n)
    for i in range(20):
        t = correlation_tensor(random_pure_state(n, rng))
        crit = multisetting_criterion(t, restarts=2, seed=i).value
        if n == 2:
            # Horodecki closed form for CHSH: 2 sqrt(s1^2 + s2^2)
            s = np.linalg.svd(t.full, compute_uv=False)
            assert crit == pytest.approx(s[0] ** 2 + s[1] ** 2, abs=1e-12)
        ratio = quantum_max(gen, t, restarts=8, seed=i).value / bound
        assert abs(ratio - math.sqrt(crit)) <= 1e-3, i


# --- 9 ------------------------------------------------------------------------


@pytest.mark.acceptance(9)
def test_purity_identity():
    rng = np.random.default_rng(90)
    for n in (1, 2, 3, 4):
        if n == 1:
            state = state_from_amplitudes(1, [0.6, 0.8j])
        else:
            state = add_white_noise(random_pure_state(n, rng), rng.uniform(0.2, 1))
        comps = correlation_tensor(state).components
        assert abs(np.sum(comps**2) / 2**n - state.purity()) <= 1e-12


@pytest.mark.acceptance(9)
def test_noise_linearity_and_quadratic_criteria():
    rng = np.random.default_rng(91)
    for n in (2, 3, 4):
        state = random_pure_state(n, rng)
        t = correlation_tensor(state)
        base = multisetting_criterion(t, restarts=2).value
        for v in (0.3, 0.55, 0.9):
            noisy = correlation_tensor(add_white_noise(state, v))
            assert np.allclose(noisy.full, v * t.full, atol=1e-12)
            value = multisetting_criterion(noisy, restarts=2).value
            assert abs(value - v**2 * base) <= 1e-6


@pytest.mark.acceptance(9)
@pytest.mark.parametrize("n", [3, 4])
def test_local_rotation_invariance(n):
    rng = np.random.default_rng(92 + n)
    t = correlation_tensor(random_pure_state(n, rng)).full
    base = multisetting_criterion(t, restarts=2).value
    count = 50 if n == 3 else 10
    for _ in range(count):
        rots = []
        for _ in range(n):
            q = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            u, _ = np.linalg.qr(q)
            rots.append(bloch_rotation(u))
        value = multisetting_criterion(rotate_block(t, rots), restarts=2).value
        assert abs(value - base) < 1e-5


@pytest.mark.acceptance(9)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_identity_value_on_random_strategies(n):
    rng = np.random.default_rng(93 + n)
    sfs = all_sign_functions()
    n_funcs = 2 ** (n - 1) - 1
    profile = setting_profile(n)
    for i in range(10_000):
        if i % 100 == 0:
            tree = SignTree.from_functions(n, [sfs[k] for k in rng.integers(16, size=n_funcs)])
        strategy = [rng.choice((-1, 1), size=m) for m in profile]
        assert abs(identity_value(strategy, tree)) == 4 ** (n - 1)
