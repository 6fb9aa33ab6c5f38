import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbispectrum.exceptions import GenericityError, InvalidParameterError, InvalidStateError
from gbispectrum.finite import (
    bispectrum,
    full_bispectrum,
    full_index,
    invert_abelian,
    selective_bispectrum,
    selective_index,
)
from gbispectrum.fourier import fourier_abelian, translate
from gbispectrum.groups import CGCache, build_cyclic, build_dihedral, build_octahedral, build_torus


@pytest.mark.parametrize(
    "builder, selective, full",
    [
        (lambda: build_cyclic(8), 8, 36),
        (lambda: build_cyclic(128), 128, 8256),
        (lambda: build_torus(4, 4), 16, 136),
        (lambda: build_torus(32, 32), 1024, 524800),
        (lambda: build_dihedral(4), 21, 64),
        (build_octahedral, 172, 576),
    ],
)
def test_scalar_counts(builder, selective, full):
    _, R = builder()
    assert selective_index(R).scalar_count == selective
    assert full_index(R).scalar_count == full


def test_d32_selective_count():
    _, R = build_dihedral(32)
    assert selective_index(R).scalar_count == 245


def test_cyclic_full_matches_triple_product(rng):
    n = 9
    _, R = build_cyclic(n)
    f = rng.standard_normal(n)
    F = np.fft.fft(f)
    expected = [F[i] * F[j] * np.conj(F[(i + j) % n]) for i in range(n) for j in range(i, n)]
    assert np.allclose(full_bispectrum(f, R).flattened, expected, atol=1e-10)


@pytest.mark.parametrize("builder", [lambda: build_dihedral(4), lambda: build_dihedral(5), build_octahedral])
@pytest.mark.parametrize("mode", ["selective", "full"])
def test_nonabelian_invariance_exhaustive(builder, mode, rng):
    G, R = builder()
    cg = CGCache(R)
    idx = selective_index(R) if mode == "selective" else full_index(R)
    f = rng.standard_normal(G.order)
    ref = bispectrum(f, R, idx, cg).flattened
    for g in range(G.order):
        b = bispectrum(translate(f, G, g), R, idx, cg).flattened
        assert np.abs(b - ref).max() <= 1e-10 * np.abs(ref).max()


def test_selective_reaches_every_irrep():
    for builder in (lambda: build_dihedral(6), build_octahedral, lambda: build_torus(3, 5)):
        _, R = builder()
        idx = selective_index(R)
        reached = {0} | {k for new in idx.reaches for k in new}
        assert reached == set(range(len(R)))


def test_batched_evaluation(rng):
    G, R = build_octahedral()
    cg = CGCache(R)
    X = rng.standard_normal((3, G.order))
    batch = selective_bispectrum(X, R, cg=cg).flattened
    for x, row in zip(X, batch):
        assert np.allclose(selective_bispectrum(x, R, cg=cg).flattened, row, atol=1e-12)


def test_nonabelian_needs_cg():
    _, R = build_dihedral(4)
    with pytest.raises(InvalidStateError):
        selective_bispectrum(np.ones(8), R)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(3, 40), seed=st.integers(0, 2**31 - 1))
def test_cyclic_inversion_round_trip(n, seed):
    G, R = build_cyclic(n)
    f = np.random.default_rng(seed).standard_normal(n)
    idx = selective_index(R)
    g = seed % n
    est = invert_abelian(selective_bispectrum(translate(f, G, g), R, idx), idx, R)
    shifts = est[G.cayley]
    res = np.linalg.norm(shifts - f, axis=1).min() / np.linalg.norm(f)
    assert res <= 1e-8


def test_torus_inversion_round_trip(rng):
    G, R = build_torus(4, 6)
    idx = selective_index(R)
    f = rng.standard_normal(G.order)
    est = invert_abelian(selective_bispectrum(f, R, idx), idx, R)
    res = np.linalg.norm(est[G.cayley] - f, axis=1).min() / np.linalg.norm(f)
    assert res <= 1e-8


def test_complex_inversion_matches_modulus_and_invariant(rng):
    _, R = build_cyclic(10)
    idx = selective_index(R)
    f = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    b = selective_bispectrum(f, R, idx).flattened
    est = invert_abelian(b, idx, R, real=False)
    assert np.allclose(np.abs(fourier_abelian(est, R)), np.abs(fourier_abelian(f, R)), atol=1e-10)
    assert np.allclose(selective_bispectrum(est, R, idx).flattened, b, atol=1e-10)


def test_genericity_violation_raises():
    _, R = build_cyclic(8)
    idx = selective_index(R)
    f = np.ones(8)  # only the zero frequency survives
    with pytest.raises(GenericityError):
        invert_abelian(selective_bispectrum(f, R, idx), idx, R)


def test_inversion_input_checks(rng):
    _, R = build_cyclic(8)
    idx = selective_index(R)
    with pytest.raises(InvalidParameterError):
        invert_abelian(np.ones(7), idx, R)
    with pytest.raises(InvalidParameterError):
        invert_abelian(np.ones(36), full_index(R), R)
    _, D = build_dihedral(4)
    with pytest.raises(InvalidParameterError):
        invert_abelian(np.ones(21), selective_index(D), D)


@pytest.mark.parametrize("a, b", [(1, 1), (2, 3), (4, 6), (6, 4), (5, 5), (3, 8)])
def test_torus_inversion_shapes(a, b, rng):
    # generators picked greedily need not split along the factors
    G, R = build_torus(a, b)
    idx = selective_index(R)
    f = rng.standard_normal((4, G.order))
    est = invert_abelian(selective_bispectrum(f, R, idx), idx, R)
    for e, x in zip(est, f):
        assert np.linalg.norm(e[G.cayley] - x, axis=1).min() <= 1e-8 * np.linalg.norm(x)
