import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import sph_harm_y

from gbispectrum.clebsch import cg_coefficient
from gbispectrum.exceptions import InvalidParameterError
from gbispectrum.so3 import (
    SphSignal,
    bootstrap_block,
    build_index_set,
    cg_power,
    coeffs_to_params,
    evaluate_invariant,
    jacobian_per_degree,
    _fd_rows,
    _program,
    numerical_rank,
    params_to_coeffs,
    parity_transform,
    random_sph_signal,
    rotate_sphere,
    sph_index,
    sphere_bispectrum,
    vanishes_on_real,
)
from gbispectrum.wigner import euler_to_matrix, random_euler, wigner_d


def naive_beta(a, l1, l2, l):
    out = 0j
    for m1 in range(-l1, l1 + 1):
        for m2 in range(-l2, l2 + 1):
            if abs(m1 + m2) <= l:
                out += cg_coefficient(l1, m1, l2, m2, l, m1 + m2) * a[sph_index(l1, m1)] * a[sph_index(l2, m2)] * np.conj(
                    a[sph_index(l, m1 + m2)]
                )
    return out


def naive_dbeta(a, da, l1, l2, l):
    out = 0j
    for m1 in range(-l1, l1 + 1):
        for m2 in range(-l2, l2 + 1):
            m = m1 + m2
            if abs(m) <= l:
                i, j, k = sph_index(l1, m1), sph_index(l2, m2), sph_index(l, m)
                c = cg_coefficient(l1, m1, l2, m2, l, m)
                out += c * (da[i] * a[j] * np.conj(a[k]) + a[i] * da[j] * np.conj(a[k]) + a[i] * a[j] * np.conj(da[k]))
    return out


def naive_proj(a, l1, l2, l):
    u = np.zeros(2 * l + 1, dtype=complex)
    for m1 in range(-l1, l1 + 1):
        for m2 in range(-l2, l2 + 1):
            if abs(m1 + m2) <= l:
                u[m1 + m2 + l] += cg_coefficient(l1, m1, l2, m2, l, m1 + m2) * a[sph_index(l1, m1)] * a[sph_index(l2, m2)]
    return u


def evaluate(f, x):
    th, ph = np.arccos(x[2]), np.arctan2(x[1], x[0])
    return sum(f.coeffs[sph_index(l, m)] * sph_harm_y(l, m, th, ph) for l in range(f.L + 1) for m in range(-l, l + 1))


def test_real_signal_is_real_valued_pointwise(rng):
    f = random_sph_signal(5, rng)
    for _ in range(5):
        x = rng.standard_normal(3)
        assert abs(evaluate(f, x / np.linalg.norm(x)).imag) < 1e-12


def test_rotation_matches_pointwise_evaluation(rng):
    # (R f)(x) = f(R^-1 x)
    L = 4
    f = random_sph_signal(L, rng)
    a = random_euler(rng)
    g = rotate_sphere(f, wigner_d(L, *a))
    R = euler_to_matrix(*a)
    for _ in range(5):
        x = rng.standard_normal(3)
        x /= np.linalg.norm(x)
        assert abs(evaluate(g, x) - evaluate(f, R.T @ x)) < 1e-12


def test_reality_enforced():
    c = np.zeros(4, dtype=complex)
    c[sph_index(1, 1)] = 1.0
    with pytest.raises(InvalidParameterError):
        SphSignal(1, c)
    assert SphSignal(1, c, real=False).reality_error() == 1.0
    with pytest.raises(InvalidParameterError):
        SphSignal(2, c)


def test_params_round_trip(rng):
    f = random_sph_signal(6, rng)
    assert np.allclose(params_to_coeffs(coeffs_to_params(f.coeffs, 6), 6), f.coeffs, atol=1e-14)
    assert np.allclose(f.params, coeffs_to_params(f.coeffs, 6))


def test_same_seed_same_signal():
    a = random_sph_signal(5, np.random.default_rng(7))
    b = random_sph_signal(5, np.random.default_rng(7))
    assert np.array_equal(a.coeffs, b.coeffs)


@pytest.mark.parametrize("t", [(1, 1, 2), (1, 2, 3), (2, 3, 4), (3, 3, 2), (0, 4, 4), (2, 4, 5)])
def test_bispectrum_matches_naive_sum(t, rng):
    f = random_sph_signal(5, rng, real=False)
    assert abs(sphere_bispectrum(f, t) - naive_beta(f.coeffs, *t)) < 1e-12


@pytest.mark.parametrize("t", [(1, 2, 2), (2, 2, 3), (0, 3, 3), (3, 4, 5)])
def test_cg_power_matches_naive_sum(t, rng):
    f = random_sph_signal(5, rng)
    assert np.isclose(cg_power(f, t), np.sum(np.abs(naive_proj(f.coeffs, *t)) ** 2), rtol=1e-12)


def test_triple_validation(rng):
    f = random_sph_signal(3, rng)
    with pytest.raises(InvalidParameterError):
        sphere_bispectrum(f, (1, 1, 3))
    with pytest.raises(InvalidParameterError):
        sphere_bispectrum(f, (2, 3, 4))


@pytest.mark.parametrize("L", [4, 8])
def test_selective_invariance_under_rotation(L, rng):
    idx = build_index_set(L)
    f = random_sph_signal(L, rng)
    ref = evaluate_invariant(f, idx)
    for _ in range(8):
        b = evaluate_invariant(rotate_sphere(f, wigner_d(L, *random_euler(rng))), idx)
        assert np.abs(b - ref).max() <= 1e-10 * np.abs(ref).max()


def test_parity_real_or_imaginary(rng):
    L = 10
    for _ in range(5):
        f = random_sph_signal(L, rng)
        for t in [(1, 2, 3), (2, 3, 4), (3, 5, 7), (2, 2, 4), (4, 6, 9)]:
            b = sphere_bispectrum(f, t)
            wrong = b.imag if sum(t) % 2 == 0 else b.real
            assert abs(wrong) <= 1e-12 * max(1.0, abs(b))


def test_parity_map_sign(rng):
    f = random_sph_signal(8, rng)
    g = parity_transform(f)
    assert np.allclose(parity_transform(g).coeffs, f.coeffs)
    for t in [(1, 1, 2), (1, 2, 2), (2, 3, 4), (3, 4, 6)]:
        assert np.isclose(sphere_bispectrum(g, t), (-1) ** sum(t) * sphere_bispectrum(f, t), atol=1e-12)


def test_first_odd_entry_flips_sign():
    rng = np.random.default_rng(20)
    for _ in range(20):
        f = random_sph_signal(4, rng)
        b = sphere_bispectrum(f, (2, 3, 4))
        bt = sphere_bispectrum(parity_transform(f), (2, 3, 4))
        assert abs(b.imag) > 1e-6
        assert np.sign(bt.imag) == -np.sign(b.imag)


def test_vanishing_triples(rng):
    f = random_sph_signal(13, rng)
    for r in range(2, 8):
        assert vanishes_on_real((r, 2 * r - 1, r))
        assert abs(sphere_bispectrum(f, (r, 2 * r - 1, r))) <= 1e-12
    assert not vanishes_on_real((2, 3, 4))
    # complex signals do not vanish
    g = random_sph_signal(5, rng, real=False)
    assert abs(sphere_bispectrum(g, (2, 3, 2))) > 1e-6


@pytest.mark.parametrize("L, bispectral", [(4, 24), (5, 37), (15, 307), (16, 348)])
def test_bispectral_counts(L, bispectral):
    idx = build_index_set(L)
    assert idx.n_bispectral == bispectral
    assert len(set(idx.bispectral)) == idx.n_bispectral
    assert not any(vanishes_on_real(t) for t in idx.bispectral)


@pytest.mark.parametrize("L, target", [(4, 34), (5, 54), (15, 384), (16, 430)])
def test_totals_within_ten_percent(L, target):
    assert abs(build_index_set(L).total - target) <= 0.1 * target


def test_cg_power_counts_frozen():
    # greedy choice at the default witness
    assert [build_index_set(L).n_cg_power for L in (4, 5, 15, 16)] == [8, 12, 85, 95]


def test_literal_seed_variant():
    assert build_index_set(4, literal_seed=True).n_bispectral == 31


def test_counts_stable_across_witnesses():
    counts = {build_index_set(8, seed=s).total for s in range(4)}
    assert len(counts) == 1


@pytest.mark.parametrize("l", range(8, 17))
def test_bootstrap_block_size(l):
    block = bootstrap_block(l)
    assert len(block) == 2 * l + 1 == len(set(block))
    assert not any(vanishes_on_real(t) for t in block)


def test_full_per_degree_rank():
    L = 15
    idx = build_index_set(L)
    f = random_sph_signal(L, np.random.default_rng(99))
    for l in range(5, L + 1):
        _, s = jacobian_per_degree(f, idx, l)
        assert numerical_rank(s, 1e-8) == 2 * l + 1


def test_jacobian_matches_analytic_derivative(rng):
    L = 6
    l = 5
    idx = build_index_set(L)
    f = random_sph_signal(L, rng)
    sub = idx.restricted(l)
    J, _ = jacobian_per_degree(f, idx, l)
    v = rng.standard_normal(2 * l + 1)
    p = np.zeros((L + 1) ** 2)
    p[l * l : (l + 1) ** 2] = v
    da = params_to_coeffs(p, L)
    a = f.coeffs
    d = [naive_dbeta(a, da, *t) for t in sub.bispectral]
    for t in sub.cg_power:
        u = naive_proj(a, *t)
        l1, l2, lp = t
        du = np.zeros(2 * lp + 1, dtype=complex)
        for m1 in range(-l1, l1 + 1):
            for m2 in range(-l2, l2 + 1):
                if abs(m1 + m2) <= lp:
                    c = cg_coefficient(l1, m1, l2, m2, lp, m1 + m2)
                    i, j = sph_index(l1, m1), sph_index(l2, m2)
                    du[m1 + m2 + lp] += c * (da[i] * a[j] + a[i] * da[j])
        d.append(2 * np.sum((np.conj(u) * du).real))
    d = np.array(d, dtype=complex)
    n = len(d)
    Jv = J @ v
    assert np.allclose(Jv[:n] + 1j * Jv[n:], d, atol=1e-7 * max(1.0, np.abs(d).max()))


def test_bootstrap_block_rank_on_real_slice():
    # on real signals beta_{a,l,b} and beta_{b,l,a} are proportional, so the
    # block alone spans one direction per unordered pair {a, b}
    f = random_sph_signal(15, np.random.default_rng(5))
    ranks = []
    for l in range(8, 16):
        J = _fd_rows(_program(bootstrap_block(l), ()), f, l)
        ranks.append(numerical_rank(np.linalg.svd(J, compute_uv=False), 1e-8))
    assert ranks == [7, 7, 9, 9, 11, 11, 13, 13]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), l=st.integers(2, 9), a=st.integers(1, 9), b=st.integers(1, 9))
def test_swap_proportionality(seed, l, a, b):
    if not abs(a - b) <= l <= a + b or max(a, b) > 9:
        return
    f = random_sph_signal(9, np.random.default_rng(seed))
    x = sphere_bispectrum(f, (a, l, b))
    y = sphere_bispectrum(f, (b, l, a))
    assert abs(x - (-1) ** l * np.sqrt((2 * b + 1) / (2 * a + 1)) * y) <= 1e-10 * max(1.0, abs(x))


def test_witness_validation():
    with pytest.raises(InvalidParameterError):
        build_index_set(5, witness=random_sph_signal(4, np.random.default_rng(0)))
    with pytest.raises(InvalidParameterError):
        build_index_set(4, witness=random_sph_signal(4, np.random.default_rng(0), real=False))
