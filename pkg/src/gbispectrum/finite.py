"""Full and selective bispectra on finite groups, and abelian inversion.

For irreps ``rho_1, rho_2`` the bispectral block is

    beta_{1,2} = (F_1 (x) F_2) C_{1,2} [(+)_k F_k^H] C_{1,2}^H,

with ``C_{1,2}`` the Clebsch-Gordan matrix of ``rho_1 (x) rho_2`` and the
direct sum ordered like its block layout.  For abelian groups every block is
the scalar ``F_i F_j conj(F_{i+j})`` and is evaluated with gathers instead of
matrix products.

The selective index set is found by breadth-first search over the Kronecker
table: starting from the trivial irrep and a small set of generating irreps,
a pair ``(g, rho)`` is kept whenever ``g (x) rho`` contains an irrep not seen
before.  Together with the anchor pairs ``(0, 0)`` and ``(0, g)`` this keeps
``O(|G|)`` scalars (``n`` for ``C_n``, 172 for ``O``, 245 for ``D_32``).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import GenericityError, InvalidParameterError, InvalidStateError
from .fourier import fourier, fourier_abelian, inverse_fourier
from .groups import CGCache, IrrepSet

__all__ = [
    "FiniteIndexSet",
    "FiniteBispectrum",
    "choose_generators",
    "full_index",
    "selective_index",
    "bispectrum",
    "full_bispectrum",
    "selective_bispectrum",
    "invert_abelian",
]

GENERICITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteIndexSet:
    """Ordered irrep pairs whose bispectral blocks are retained.

    ``reaches[p]`` lists the irreps first reached by pair ``p`` during the
    selective search (empty for full index sets).
    """

    pairs: tuple
    dims: tuple
    mode: str
    ordered: bool = True
    generators: tuple = ()
    reaches: tuple = ()

    @cached_property
    def block_sizes(self) -> tuple:
        return tuple((self.dims[i] * self.dims[j]) ** 2 for i, j in self.pairs)

    @property
    def scalar_count(self) -> int:
        return int(sum(self.block_sizes))

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True, eq=False)
class FiniteBispectrum:
    """Bispectral blocks stored as one flat ``(..., scalar_count)`` array."""

    flattened: np.ndarray
    index: FiniteIndexSet

    @property
    def entries(self) -> list:
        out, start = [], 0
        for (i, j), size in zip(self.index.pairs, self.index.block_sizes):
            D = self.index.dims[i] * self.index.dims[j]
            out.append(self.flattened[..., start : start + size].reshape(self.flattened.shape[:-1] + (D, D)))
            start += size
        return out


def full_index(irreps: IrrepSet, ordered: bool | None = None) -> FiniteIndexSet:
    """Every irrep pair.

    ``ordered=None`` picks unordered pairs ``i <= j`` for abelian groups and
    ordered pairs otherwise, so that ``C_n`` has ``n(n+1)/2`` scalars and
    ``O`` has ``(sum d_i^2)^2 = 576``.
    """
    if ordered is None:
        ordered = not irreps.is_abelian
    r = len(irreps)
    if ordered:
        pairs = tuple((i, j) for i in range(r) for j in range(r))
    else:
        pairs = tuple((i, j) for i in range(r) for j in range(i, r))
    return FiniteIndexSet(pairs, irreps.dims, "full", ordered)


def _closure(irreps: IrrepSet, gens) -> np.ndarray:
    r = len(irreps)
    seen = np.zeros(r, dtype=bool)
    seen[0] = True
    seen[list(gens)] = True
    frontier = np.flatnonzero(seen)
    while frontier.size:
        if irreps.abelian_product is not None:
            hits = np.unique(irreps.abelian_product[np.ix_(list(gens), frontier)])
        else:
            hits = np.array(sorted({k for g in gens for f in frontier for k, _ in irreps.decompose(g, f)}), dtype=int)
        hits = hits[~seen[hits]] if hits.size else hits
        seen[hits] = True
        frontier = hits
    return seen


def choose_generators(irreps: IrrepSet) -> tuple:
    """Greedy generating set for the Kronecker graph.

    Repeatedly adds the irrep (first in construction order on ties) whose
    addition reaches the most irreps, until everything is reached.  Picks
    ``chi_1`` for ``C_n``, the first faithful 2-D irrep for ``D_n``, ``T1``
    for ``O`` and the two coordinate characters for a torus.
    """
    r = len(irreps)
    gens: list = []
    reached = _closure(irreps, gens)
    while not reached.all():
        best, best_count = None, -1
        for cand in range(1, r):
            if cand in gens:
                continue
            cnt = int(_closure(irreps, gens + [cand]).sum())
            if cnt > best_count:
                best, best_count = cand, cnt
                if cnt == r:
                    break
        gens.append(best)
        reached = _closure(irreps, gens)
    return tuple(gens)


def selective_index(irreps: IrrepSet, generators=None) -> FiniteIndexSet:
    """Breadth-first selection of ``O(|G|)`` bispectral pairs."""
    gens = tuple(generators) if generators is not None else choose_generators(irreps)
    r = len(irreps)
    reached = np.zeros(r, dtype=bool)
    reached[0] = True
    pairs, reaches = [(0, 0)], [(0,)]
    queue = deque([0])
    for g in gens:
        pairs.append((0, g))
        reaches.append(() if reached[g] else (g,))
        reached[g] = True
        queue.append(g)
    while queue and not reached.all():
        rho = queue.popleft()
        for g in gens:
            new = tuple(k for k, _ in irreps.decompose(g, rho) if not reached[k])
            if new:
                pairs.append((g, rho))
                reaches.append(new)
                reached[list(new)] = True
                queue.extend(new)
    if not reached.all():
        raise InvalidStateError(
            f"Kronecker graph of {irreps.group.name} is disconnected from generators {gens}"
        )
    return FiniteIndexSet(tuple(pairs), irreps.dims, "selective", True, gens, tuple(reaches))


def _abelian_values(F, irreps, pairs):
    I = np.fromiter((p[0] for p in pairs), dtype=int, count=len(pairs))
    J = np.fromiter((p[1] for p in pairs), dtype=int, count=len(pairs))
    K = irreps.abelian_product[I, J] if irreps.abelian_product is not None else None
    if K is None:
        K = np.array([irreps.decompose(i, j)[0][0] for i, j in pairs], dtype=int)
    return F[..., I] * F[..., J] * F[..., K].conj()


def bispectrum(signal, irreps: IrrepSet, index: FiniteIndexSet, cg: CGCache | None = None) -> FiniteBispectrum:
    """Evaluate the bispectral blocks listed in ``index``."""
    if index.dims != irreps.dims:
        raise InvalidParameterError("index set was built for a different irrep set")
    if irreps.is_abelian:
        F = fourier_abelian(signal, irreps)
        return FiniteBispectrum(_abelian_values(F, irreps, index.pairs), index)
    if cg is None:
        raise InvalidStateError("a CG cache is required for non-abelian groups")
    blocks = fourier(signal, irreps)
    batch = blocks[0].shape[:-2]
    out = []
    for i, j in index.pairs:
        C = cg[i, j]
        D = irreps.dims[i] * irreps.dims[j]
        kron = np.einsum("...ab,...cd->...acbd", blocks[i], blocks[j]).reshape(batch + (D, D))
        direct = np.zeros(batch + (D, D), dtype=complex)
        start = 0
        for k, _ in C.block_layout:
            dk = irreps.dims[k]
            direct[..., start : start + dk, start : start + dk] = np.swapaxes(blocks[k], -1, -2).conj()
            start += dk
        beta = kron @ C.matrix @ direct @ C.matrix.conj().T
        out.append(beta.reshape(batch + (D * D,)))
    return FiniteBispectrum(np.concatenate(out, axis=-1), index)


def full_bispectrum(signal, irreps: IrrepSet, cg: CGCache | None = None, ordered: bool | None = None):
    return bispectrum(signal, irreps, full_index(irreps, ordered), cg)


def selective_bispectrum(signal, irreps: IrrepSet, index: FiniteIndexSet | None = None, cg: CGCache | None = None):
    if index is None:
        index = selective_index(irreps)
    if index.mode != "selective":
        raise InvalidParameterError("selective_bispectrum needs a selective index set")
    return bispectrum(signal, irreps, index, cg)


def invert_abelian(beta, index: FiniteIndexSet, irreps: IrrepSet, real: bool = True, tol: float = GENERICITY_TOL):
    """Recover a signal from its selective bispectrum by frequency marching.

    The phase of every generator coefficient is gauge fixed to zero, then each
    retained pair ``(g, rho)`` yields ``F_new = conj(beta / (F_g F_rho))``.  For
    real signals the gauge is then snapped back onto the group: the
    wrap-around coefficient ``F_{-g} = conj(F_g)`` pins each generator phase up
    to a multiple of ``2 pi / order(g)``, i.e. up to a genuine translation.
    Complex signals are recovered only up to a continuous phase per
    generator.

    Raises ``GenericityError`` when a coefficient on the marching path has
    magnitude below ``tol``.
    """
    if isinstance(beta, FiniteBispectrum):
        beta = beta.flattened
    beta = np.asarray(beta, dtype=complex)
    if not irreps.is_abelian:
        raise InvalidParameterError("inversion is only available for abelian groups")
    if index.mode != "selective":
        raise InvalidParameterError("inversion needs a selective index set")
    if beta.shape[-1] != index.scalar_count:
        raise InvalidParameterError(f"expected {index.scalar_count} bispectral values, got {beta.shape[-1]}")
    r = len(irreps)
    gens = index.generators
    batch = beta.shape[:-1]
    F = np.zeros(batch + (r,), dtype=complex)
    expo = np.zeros((r, len(gens)), dtype=int)

    def check(val, what):
        if np.any(np.abs(val) < tol):
            raise GenericityError(f"|{what}| < {tol:g}; the bispectrum cannot be inverted (non-generic signal)")

    for p, ((i, j), new) in enumerate(zip(index.pairs, index.reaches)):
        b = beta[..., p]
        if (i, j) == (0, 0):
            check(b, "F_0")
            F[..., 0] = b / np.abs(b) ** (2.0 / 3.0)
        elif i == 0:
            if not new:
                continue
            (g,) = new
            mag2 = np.abs(b / F[..., 0])
            check(mag2, f"F_{g}")
            F[..., g] = np.sqrt(mag2)
            expo[g, gens.index(g)] = 1
        else:
            denom = F[..., i] * F[..., j]
            (k,) = new
            val = np.conj(b / denom)
            check(val, f"F_{k}")
            F[..., k] = val
            expo[k] = expo[i] + expo[j]

    if real and gens:
        # F_{-k} F_k is real positive for a real signal; each such product is a
        # relation among generator exponents that pins the gauge phases modulo
        # a genuine translation
        rows = []
        for k in range(r):
            lam = expo[irreps.dual(k)] + expo[k]
            if lam.any():
                rows.append((lam.copy(), -np.angle(F[..., irreps.dual(k)] * F[..., k])))
        B, phi = _lattice_basis(rows, len(gens))
        theta = np.linalg.solve(B, np.moveaxis(phi, 0, -1)[..., None])[..., 0]
        F = F * np.exp(1j * (theta @ expo.T))
    signal = inverse_fourier([F[..., k, None, None] for k in range(r)], irreps)
    return signal.real if real else signal


def _lattice_basis(rows, m):
    """Integer row reduction of ``(relation, phase)`` pairs to a triangular basis.

    Integer combinations of relations carry the same combinations of their
    phases, so solving ``B theta = phi`` satisfies every relation mod 2 pi.
    """
    rows = [(v.astype(int), np.asarray(p, dtype=float)) for v, p in rows]
    basis, phases = [], []
    for col in range(m):
        live = [row for row in rows if row[0][col] != 0]
        rest = [row for row in rows if row[0][col] == 0]
        while len(live) > 1:
            live.sort(key=lambda row: abs(row[0][col]))
            pv, pp = live[0]
            nxt = [live[0]]
            for v, ph in live[1:]:
                q = v[col] // pv[col]
                v, ph = v - q * pv, ph - q * pp
                (nxt if v[col] != 0 else rest).append((v, ph))
            live = nxt
        if not live:
            raise InvalidStateError(f"real-signal relations do not determine generator phase {col}")
        basis.append(live[0][0])
        phases.append(live[0][1])
        rows = [row for row in rest if row[0].any()]
    return np.array(basis, dtype=float), np.array(phases)
