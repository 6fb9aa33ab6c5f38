"""Finite groups, unitary irreducible representations and Clebsch-Gordan matrices.

Groups are stored as Cayley tables over element indices ``0..|G|-1``.  Irreps
are stored as stacks of matrices, one ``d x d`` matrix per group element, so
``irreps.matrices[i][g]`` is ``rho_i(g)``.  The trivial irrep is always index 0.

Four families are supported: cyclic ``C_n``, the discrete torus
``C_a x C_b``, the dihedral group ``D_n`` of order ``2n`` and the chiral
octahedral group ``O`` of order 24.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import InvalidParameterError, InvalidStateError, NumericDegeneracyError

__all__ = [
    "FiniteGroup",
    "IrrepSet",
    "CGMatrix",
    "CGCache",
    "build_cyclic",
    "build_torus",
    "build_dihedral",
    "build_octahedral",
    "compute_cg_matrix",
]

EXHAUSTIVE_LIMIT = 64


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """Multiplication table of a finite group.

    ``cayley[g, h]`` is the index of ``g * h``.
    """

    name: str
    cayley: np.ndarray
    inverse: np.ndarray
    identity: int

    @property
    def order(self) -> int:
        return self.cayley.shape[0]

    def multiply(self, g: int, h: int) -> int:
        return int(self.cayley[g, h])

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != self.identity:
            x = self.cayley[x, g]
            k += 1
        return k

    def axiom_violations(self, exhaustive_limit=EXHAUSTIVE_LIMIT, samples=10_000, seed=0) -> int:
        """Count failures of the identity, inverse and associativity laws.

        Associativity is checked on every triple when ``|G| <= exhaustive_limit``
        and on ``samples`` random triples otherwise.
        """
        n, e, T = self.order, self.identity, self.cayley
        idx = np.arange(n)
        bad = int(np.count_nonzero(T[e] != idx)) + int(np.count_nonzero(T[:, e] != idx))
        bad += int(np.count_nonzero(T[idx, self.inverse] != e))
        if n <= exhaustive_limit:
            left = T[T[:, :, None], idx[None, None, :]]
            right = T[idx[:, None, None], T[None, :, :]]
            bad += int(np.count_nonzero(left != right))
        else:
            rng = np.random.default_rng(seed)
            a, b, c = rng.integers(0, n, size=(3, samples))
            bad += int(np.count_nonzero(T[T[a, b], c] != T[a, T[b, c]]))
        return bad


@dataclass(frozen=True, eq=False)
class IrrepSet:
    """A complete set of unitary irreps of ``group``.

    ``abelian_product`` is an optional ``r x r`` table giving the index of
    ``rho_i (x) rho_j`` when every irrep is one-dimensional; builders of the
    abelian families provide it so that Kronecker products never need the
    O(r^2 |G|) character computation.  ``fft_shape`` marks sets whose
    Fourier transform is a plain DFT over that grid (cyclic groups and tori).
    """

    group: FiniteGroup
    matrices: tuple
    names: tuple
    abelian_product: np.ndarray | None = None
    fft_shape: tuple | None = None

    def __len__(self):
        return len(self.matrices)

    @cached_property
    def dims(self) -> tuple:
        return tuple(int(m.shape[1]) for m in self.matrices)

    @cached_property
    def characters(self) -> np.ndarray:
        return np.stack([np.trace(m, axis1=1, axis2=2) for m in self.matrices])

    @property
    def is_abelian(self) -> bool:
        return all(d == 1 for d in self.dims)

    @cached_property
    def _onedim_stack(self):
        # (r, |G|) values of the 1-D irreps; only valid for abelian sets
        return np.stack([m[:, 0, 0] for m in self.matrices])

    def decompose(self, i: int, j: int) -> tuple:
        """Irreps contained in ``rho_i (x) rho_j`` as ``((k, multiplicity), ...)``."""
        if self.abelian_product is not None:
            return ((int(self.abelian_product[i, j]), 1),)
        return tuple((k, m) for k, m in enumerate(self._kronecker_row(i, j)) if m)

    def _kronecker_row(self, i, j):
        raw = self._kronecker_raw_row(i, j)
        return np.rint(raw).astype(int)

    def _kronecker_raw_row(self, i, j):
        chi = self.characters
        return ((chi[i] * chi[j]) @ chi.conj().T).real / self.group.order

    @cached_property
    def kronecker_raw(self) -> np.ndarray:
        """Unrounded multiplicities ``(1/|G|) sum_g chi_i chi_j conj(chi_k)``."""
        chi = self.characters
        prod = chi[:, None, :] * chi[None, :, :]
        return np.einsum("ijg,kg->ijk", prod, chi.conj()).real / self.group.order

    @cached_property
    def kronecker(self) -> np.ndarray:
        """Dense multiplicity tensor ``m[i, j, k]``."""
        r = len(self)
        if self.abelian_product is not None:
            m = np.zeros((r, r, r), dtype=int)
            ii, jj = np.meshgrid(np.arange(r), np.arange(r), indexing="ij")
            m[ii, jj, self.abelian_product] = 1
            return m
        return np.rint(self.kronecker_raw).astype(int)

    def product_index(self, i: int, j: int) -> int:
        if self.abelian_product is None:
            raise InvalidStateError("product_index is only defined for abelian irrep sets")
        return int(self.abelian_product[i, j])

    def dual(self, i: int) -> int:
        """Index of the irrep whose character is the conjugate of ``chi_i``."""
        chi = self.characters
        dist = np.abs(chi - chi[i].conj()[None, :]).max(axis=1)
        return int(np.argmin(dist))


# ---------------------------------------------------------------------------
# builders


def build_cyclic(n: int):
    """Cyclic group ``C_n`` with characters ``exp(2 pi i k g / n)``."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParameterError(f"cyclic order must be a positive integer, got {n!r}")
    n = int(n)
    g = np.arange(n)
    group = FiniteGroup(
        name=f"C{n}",
        cayley=_frozen((g[:, None] + g[None, :]) % n),
        inverse=_frozen((-g) % n),
        identity=0,
    )
    chi = np.exp(2j * np.pi * np.outer(g, g) / n)
    mats = tuple(_frozen(chi[k][:, None, None]) for k in range(n))
    irreps = IrrepSet(
        group=group,
        matrices=mats,
        names=tuple(f"chi{k}" for k in range(n)),
        abelian_product=_frozen((g[:, None] + g[None, :]) % n),
        fft_shape=(n,),
    )
    return group, irreps


def build_torus(a: int, b: int):
    """Discrete torus ``C_a x C_b``; element ``(x, y)`` has index ``x*b + y``."""
    for v in (a, b):
        if not isinstance(v, (int, np.integer)) or v < 1:
            raise InvalidParameterError(f"torus dimensions must be positive integers, got {(a, b)!r}")
    a, b = int(a), int(b)
    x, y = np.divmod(np.arange(a * b), b)
    cayley = ((x[:, None] + x[None, :]) % a) * b + (y[:, None] + y[None, :]) % b
    group = FiniteGroup(
        name=f"C{a}xC{b}",
        cayley=_frozen(cayley),
        inverse=_frozen(((-x) % a) * b + (-y) % b),
        identity=0,
    )
    # irrep (k, l) has the same index layout as elements
    phase = np.outer(x, x) / a + np.outer(y, y) / b
    chi = np.exp(2j * np.pi * phase)
    mats = tuple(_frozen(chi[i][:, None, None]) for i in range(a * b))
    irreps = IrrepSet(
        group=group,
        matrices=mats,
        names=tuple(f"chi({k},{l})" for k, l in zip(x, y)),
        abelian_product=_frozen(cayley.copy()),
        fft_shape=(a, b),
    )
    return group, irreps


def build_dihedral(n: int):
    """Dihedral group ``D_n`` of order ``2n``.

    Element ``r^k s^j`` has index ``j*n + k``.  Irreps are ordered
    ``A1, A2, [B1, B2,] rho_1, ..., rho_h`` with ``rho_h`` the 2-D irrep in
    which ``r`` acts as rotation by ``2 pi h / n`` and ``s`` as ``diag(1, -1)``.
    """
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise InvalidParameterError(f"dihedral n must be an integer >= 3, got {n!r}")
    n = int(n)
    idx = np.arange(2 * n)
    j, k = np.divmod(idx, n)
    sign = np.where(j == 1, -1, 1)
    cayley = j[:, None] ^ j[None, :]
    cayley = cayley * n + (k[:, None] + sign[:, None] * k[None, :]) % n
    inverse = np.where(j == 1, idx, (-k) % n)
    group = FiniteGroup(f"D{n}", _frozen(cayley), _frozen(inverse), 0)

    ones = np.ones(2 * n)
    refl = np.where(j == 1, -1.0, 1.0)
    alt = np.where(k % 2 == 1, -1.0, 1.0)
    oned = [("A1", ones), ("A2", refl)]
    if n % 2 == 0:
        oned += [("B1", alt), ("B2", alt * refl)]
    names, mats = [], []
    for name, vals in oned:
        names.append(name)
        mats.append(_frozen(vals.astype(complex)[:, None, None]))
    s = np.diag([1.0, -1.0])
    for h in range(1, (n - 1) // 2 + 1):
        t = 2 * np.pi * h * k / n
        rot = np.stack([np.stack([np.cos(t), -np.sin(t)], -1), np.stack([np.sin(t), np.cos(t)], -1)], 1)
        m = np.where((j == 1)[:, None, None], rot @ s, rot)
        names.append(f"rho{h}")
        mats.append(_frozen(m.astype(complex)))
    return group, IrrepSet(group, tuple(mats), tuple(names))


def build_octahedral():
    """Chiral octahedral group ``O`` (rotations of the cube), order 24.

    Generators are ``a`` = quarter turn about z and ``b`` = the 3-fold
    rotation cycling the coordinate axes.  They satisfy ``a^4 = b^3 =
    (ab)^2 = 1``.  Irrep images of the generators:

    ==== ======================== ===========================
    irrep ``a``                    ``b``
    ==== ======================== ===========================
    A1   1                        1
    A2   -1                       1
    E    diag(1, -1)              rotation by 120 degrees
    T1   the 3x3 rotation          the 3x3 rotation
    T2   minus the 3x3 rotation    the 3x3 rotation
    ==== ======================== ===========================

    Elements are enumerated breadth first from the identity by right
    multiplication with ``a`` then ``b``; every irrep matrix is the product of
    the generator images along that word.
    """
    a3 = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
    b3 = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=float)
    c, s = -0.5, np.sqrt(3.0) / 2
    gens = [
        [np.eye(1), np.eye(1)],
        [-np.eye(1), np.eye(1)],
        [np.diag([1.0, -1.0]), np.array([[c, -s], [s, c]])],
        [a3, b3],
        [-a3, b3],
    ]
    names = ("A1", "A2", "E", "T1", "T2")

    key = lambda m: tuple(np.rint(m).astype(int).ravel())  # noqa: E731
    elems = [[np.eye(g[0].shape[0]) for g in gens]]
    lookup = {key(elems[0][3]): 0}
    frontier = [0]
    while frontier:
        nxt = []
        for e in frontier:
            for gi in range(2):
                mats = [elems[e][r] @ gens[r][gi] for r in range(len(gens))]
                kk = key(mats[3])
                if kk not in lookup:
                    lookup[kk] = len(elems)
                    elems.append(mats)
                    nxt.append(lookup[kk])
        frontier = nxt
    order = len(elems)
    if order != 24:
        raise NumericDegeneracyError(f"octahedral enumeration produced {order} elements")
    t1 = np.stack([e[3] for e in elems])
    cayley = np.empty((order, order), dtype=int)
    for g in range(order):
        for h in range(order):
            cayley[g, h] = lookup[key(t1[g] @ t1[h])]
    inverse = np.array([int(np.where(cayley[g] == 0)[0][0]) for g in range(order)])
    group = FiniteGroup("O", _frozen(cayley), _frozen(inverse), 0)
    mats = tuple(_frozen(np.stack([e[r] for e in elems]).astype(complex)) for r in range(len(gens)))
    return group, IrrepSet(group, mats, names)


# ---------------------------------------------------------------------------
# Clebsch-Gordan matrices


@dataclass(frozen=True, eq=False)
class CGMatrix:
    """Unitary ``C`` with ``C^H (rho_i(g) (x) rho_j(g)) C = (+)_blocks rho_k(g)``.

    ``block_layout`` lists ``(k, copy)`` for each diagonal block, in column
    order.
    """

    pair: tuple
    matrix: np.ndarray
    block_layout: tuple

    def block_dims(self, irreps: IrrepSet) -> list:
        return [irreps.dims[k] for k, _ in self.block_layout]


def compute_cg_matrix(irreps: IrrepSet, i: int, j: int, rng_seed: int = 0, max_reseeds: int = 8) -> CGMatrix:
    """Numerically block-diagonalize ``rho_i (x) rho_j`` by group averaging.

    For each target irrep ``k`` of multiplicity ``m``, random matrices ``X``
    are averaged into intertwiners ``T = (d_k/|G|) sum_g (rho_i (x) rho_j)(g) X
    rho_k(g)^H``.  Copies are orthogonalized blockwise (by Schur's lemma the
    Gram matrix of an intertwiner is a multiple of the identity) and each
    block's phase is fixed by making the first nonzero entry of its first
    column real positive.
    """
    r = len(irreps)
    if not (0 <= i < r and 0 <= j < r):
        raise InvalidParameterError(f"irrep indices {(i, j)} out of range for {r} irreps")
    d1, d2 = irreps.dims[i], irreps.dims[j]
    if d1 == 1 and d2 == 1:
        (k, _), = irreps.decompose(i, j)
        return CGMatrix((i, j), _frozen(np.ones((1, 1), dtype=complex)), ((k, 0),))

    G = irreps.group.order
    D = d1 * d2
    A, B = irreps.matrices[i], irreps.matrices[j]
    prod = np.einsum("gab,gcd->gacbd", A, B).reshape(G, D, D)
    rng = np.random.default_rng(rng_seed)
    blocks, layout = [], []
    for k, mult in irreps.decompose(i, j):
        dk = irreps.dims[k]
        Rk = irreps.matrices[k]
        copies = []
        failures = 0
        while len(copies) < mult:
            X = rng.standard_normal((D, dk)) + 1j * rng.standard_normal((D, dk))
            T = (dk / G) * np.einsum("gab,bc,gdc->ad", prod, X, Rk.conj())
            for P in copies:
                T = T - P @ (P.conj().T @ T)
            gram = T.conj().T @ T
            scale = np.trace(gram).real / dk
            if scale < 1e-8 * np.linalg.norm(X) ** 2 / D:
                failures += 1
                if failures > max_reseeds:
                    raise NumericDegeneracyError(
                        f"intertwiner for {irreps.names[k]} in {irreps.names[i]} x {irreps.names[j]} "
                        f"stayed rank deficient after {max_reseeds} reseeds"
                    )
                continue
            w, V = np.linalg.eigh(gram)
            T = T @ (V / np.sqrt(w)) @ V.conj().T
            col = T[:, 0]
            p = int(np.flatnonzero(np.abs(col) > 1e-8)[0])
            T = T * (np.abs(col[p]) / col[p])
            copies.append(T)
        blocks.extend(copies)
        layout.extend((k, c) for c in range(mult))
    C = np.concatenate(blocks, axis=1)
    if C.shape != (D, D):
        raise NumericDegeneracyError(f"CG blocks span {C.shape[1]} of {D} dimensions")
    return CGMatrix((i, j), _frozen(C), tuple(layout))


class CGCache:
    """Lazily computed CG matrices for one irrep set, keyed by irrep pair."""

    def __init__(self, irreps: IrrepSet, rng_seed: int = 0, precompute=None):
        self.irreps = irreps
        self.rng_seed = rng_seed
        self._store = {}
        for pair in precompute or ():
            self[pair]

    def __getitem__(self, pair) -> CGMatrix:
        pair = (int(pair[0]), int(pair[1]))
        cg = self._store.get(pair)
        if cg is None:
            cg = compute_cg_matrix(self.irreps, *pair, rng_seed=self.rng_seed)
            self._store[pair] = cg
        return cg

    def __contains__(self, pair):
        return tuple(pair) in self._store

    def __len__(self):
        return len(self._store)
