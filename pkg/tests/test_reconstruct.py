import numpy as np

from gbispectrum.reconstruct import ReconstructConfig, align_orbit, reconstruct
from gbispectrum.so3 import build_index_set, evaluate_invariant, random_sph_signal, rotate_sphere
from gbispectrum.wigner import random_euler, wigner_d

FAST = ReconstructConfig(restarts=3, iterations=150, seed=1)


def test_zero_target_gives_zero_signal():
    idx = build_index_set(3)
    res = reconstruct(np.zeros(idx.total), 3, FAST, idx)
    assert res.residual == 0.0 and not np.any(res.signal.coeffs)


def test_invariant_residual_small_at_low_degree():
    L = 3
    idx = build_index_set(L)
    f = random_sph_signal(L, np.random.default_rng(4))
    res = reconstruct(evaluate_invariant(f, idx), L, FAST, idx)
    assert res.residual <= 1e-10
    assert len(res.restart_residuals) == 3 and min(res.restart_residuals) == res.residual
    assert res.signal.real and res.signal.reality_error() < 1e-12


def test_residual_definition():
    L = 2
    idx = build_index_set(L)
    f = random_sph_signal(L, np.random.default_rng(0))
    target = evaluate_invariant(f, idx)
    res = reconstruct(target, L, ReconstructConfig(restarts=1, iterations=5, polish=False), idx)
    got = evaluate_invariant(res.signal, idx)
    expected = np.sum(np.abs(got - target) ** 2) / np.sum(np.abs(target) ** 2)
    assert np.isclose(res.residual, expected, rtol=1e-10)


def test_align_recovers_planted_rotation(rng):
    L = 4
    f = random_sph_signal(L, rng)
    g = rotate_sphere(f, wigner_d(L, *random_euler(rng)))
    rot, res = align_orbit(g, f)
    assert res <= 1e-10
    assert np.abs(rotate_sphere(g, rot).coeffs - f.coeffs).max() <= 1e-9


def test_align_of_unrelated_signals_is_large(rng):
    f = random_sph_signal(4, rng)
    g = random_sph_signal(4, rng)
    assert align_orbit(g, f)[1] > 0.1
