"""Band-limited signals on the sphere and their SO(3)-invariant polynomials.

Coefficients of a degree-``L`` signal live in one flat complex array of
length ``(L+1)^2`` with ``a_l^m`` at position ``l*l + l + m``.  Rotations act
blockwise, ``F_l -> D^l F_l``.

Two families of invariants are evaluated:

* the scalar bispectrum
  ``beta_{l1,l2,l} = sum_{m1+m2=m} <l1 m1; l2 m2|l m> a_{l1}^{m1} a_{l2}^{m2} conj(a_l^m)``;
* the CG power ``P_{l1,l2,l} = || (F_{l1} (x) F_{l2})|_l ||^2``.

Both are compiled into flat gather/reduce programs so that a whole index
set is evaluated on a batch of signals with a handful of numpy calls.

On real signals ``beta`` is real when ``l1+l2+l`` is even and imaginary when
it is odd; odd entries with a repeated degree vanish identically.  The
selective index set keeps ``2l+1`` bispectral triples per degree and tops up
with CG powers until the Jacobian with respect to ``F_l`` has full rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .clebsch import CGTable, admissible, cg_block
from .exceptions import InvalidParameterError, NumericDegeneracyError
from .wigner import WignerRotation

__all__ = [
    "SphSignal",
    "CGCache",
    "SO3IndexSet",
    "sph_index",
    "random_sph_signal",
    "rotate_sphere",
    "parity_transform",
    "sphere_bispectrum",
    "cg_power",
    "vanishes_on_real",
    "small_block",
    "bootstrap_block",
    "build_index_set",
    "evaluate_invariant",
    "jacobian_per_degree",
    "numerical_rank",
    "params_to_coeffs",
    "coeffs_to_params",
]

CGCache = CGTable
REALITY_TOL = 1e-12
L_SEED = 4


def sph_index(l: int, m: int) -> int:
    return l * l + l + m


def _check_L(L):
    if not isinstance(L, (int, np.integer)) or L < 0:
        raise InvalidParameterError(f"band limit must be a nonnegative integer, got {L!r}")


@lru_cache(maxsize=None)
def _conj_map(L: int):
    """Index of ``a_l^{-m}`` and sign ``(-1)^m`` for every flat position."""
    src = np.empty((L + 1) ** 2, dtype=int)
    sign = np.empty((L + 1) ** 2)
    for l in range(L + 1):
        for m in range(-l, l + 1):
            src[sph_index(l, m)] = sph_index(l, -m)
            sign[sph_index(l, m)] = -1.0 if m % 2 else 1.0
    return src, sign


def _reality_error(coeffs, L):
    src, sign = _conj_map(L)
    return float(np.max(np.abs(coeffs - sign * coeffs[..., src].conj()), initial=0.0))


@dataclass(frozen=True, eq=False)
class SphSignal:
    """Spherical-harmonic coefficients up to degree ``L``."""

    L: int
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        _check_L(self.L)
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != ((self.L + 1) ** 2,):
            raise InvalidParameterError(f"expected {(self.L + 1) ** 2} coefficients, got shape {c.shape}")
        if self.real:
            err = _reality_error(c, self.L)
            scale = max(1.0, float(np.abs(c).max(initial=0.0)))
            if err > REALITY_TOL * scale:
                raise InvalidParameterError(f"coefficients violate the reality constraint by {err:.3g}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_blocks(cls, blocks, real: bool = True) -> "SphSignal":
        return cls(len(blocks) - 1, np.concatenate([np.asarray(b, dtype=complex) for b in blocks]), real)

    def F(self, l: int) -> np.ndarray:
        return self.coeffs[l * l : (l + 1) ** 2]

    @property
    def blocks(self) -> list:
        return [self.F(l) for l in range(self.L + 1)]

    @property
    def params(self) -> np.ndarray:
        return coeffs_to_params(self.coeffs, self.L)

    def reality_error(self) -> float:
        return _reality_error(self.coeffs, self.L)

    def truncate(self, L: int) -> "SphSignal":
        return SphSignal(L, self.coeffs[: (L + 1) ** 2], self.real)


@lru_cache(maxsize=None)
def _param_map(L: int) -> np.ndarray:
    """Complex ``(n, n)`` matrix ``M`` with ``coeffs = params @ M`` on the real slice.

    Per degree the parameters are ``[a^0, Re a^1, Im a^1, ..., Re a^l, Im a^l]``.
    """
    n = (L + 1) ** 2
    M = np.zeros((n, n), dtype=complex)
    for l in range(L + 1):
        M[l * l, sph_index(l, 0)] = 1.0
        for m in range(1, l + 1):
            re, im = l * l + 2 * m - 1, l * l + 2 * m
            s = -1.0 if m % 2 else 1.0
            M[re, sph_index(l, m)] = 1.0
            M[im, sph_index(l, m)] = 1j
            M[re, sph_index(l, -m)] = s
            M[im, sph_index(l, -m)] = -1j * s
    M.setflags(write=False)
    return M


def params_to_coeffs(params, L: int) -> np.ndarray:
    return np.asarray(params, dtype=float) @ _param_map(L)


def coeffs_to_params(coeffs, L: int) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    out = np.empty(coeffs.shape[:-1] + ((L + 1) ** 2,))
    for l in range(L + 1):
        out[..., l * l] = coeffs[..., sph_index(l, 0)].real
        pos = coeffs[..., sph_index(l, 1) : sph_index(l, l) + 1]
        out[..., l * l + 1 : (l + 1) ** 2 : 2] = pos.real
        out[..., l * l + 2 : (l + 1) ** 2 : 2] = pos.imag
    return out


def random_sph_signal(L: int, rng: np.random.Generator, real: bool = True) -> SphSignal:
    """Generic witness: standard complex Gaussian for ``m > 0``, real Gaussian at ``m = 0``.

    Real signals get the remaining coefficients from the reality
    constraint; complex signals draw every coefficient independently.
    """
    _check_L(L)
    n = (L + 1) ** 2
    if not real:
        return SphSignal(L, (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2), False)
    p = rng.standard_normal(n)
    for l in range(L + 1):
        p[l * l + 1 : (l + 1) ** 2] /= np.sqrt(2)
    return SphSignal(L, params_to_coeffs(p, L), True)


def rotate_sphere(f: SphSignal, rot: WignerRotation) -> SphSignal:
    """``F_l -> D^l F_l`` for every degree."""
    if rot.L < f.L:
        raise InvalidParameterError(f"rotation has band limit {rot.L}, signal needs {f.L}")
    out = np.concatenate([rot[l] @ f.F(l) for l in range(f.L + 1)])
    if f.real:
        # re-impose the constraint exactly; the rotation preserves it up to rounding
        src, sign = _conj_map(f.L)
        err = _reality_error(out, f.L)
        if err > 1e-10 * max(1.0, float(np.abs(out).max())):
            raise NumericDegeneracyError(f"rotation broke the reality constraint by {err:.3g}")
        out = 0.5 * (out + sign * out[src].conj())
    return SphSignal(f.L, out, f.real)


def parity_transform(f: SphSignal) -> SphSignal:
    """``a_l^m -> (-1)^m a_l^{-m}``; an involution that maps real signals to real signals."""
    src, sign = _conj_map(f.L)
    return SphSignal(f.L, sign * f.coeffs[src], f.real)


def vanishes_on_real(triple) -> bool:
    """Odd-parity triples with a repeated degree are identically zero on real signals."""
    l1, l2, l = triple
    return (l1 + l2 + l) % 2 == 1 and len({l1, l2, l}) < 3


def _triple_degree(t) -> int:
    return max(t)


def _power_degree(t) -> int:
    return max(t[0], t[1])


class _Program:
    """Gather/reduce program for a list of bispectral triples and CG powers."""

    def __init__(self, beta_triples, power_triples):
        self.n_beta = len(beta_triples)
        self.n_power = len(power_triples)
        i1, i2, i3, coef, starts = [], [], [], [], []
        pos = 0
        for l1, l2, l in beta_triples:
            a, b, c, w = _block_entries(l1, l2, l)
            starts.append(pos)
            pos += len(w)
            i1.append(a), i2.append(b), i3.append(c), coef.append(w)
        self.b = (
            (np.concatenate(i1), np.concatenate(i2), np.concatenate(i3), np.concatenate(coef), np.array(starts))
            if beta_triples
            else None
        )
        i1, i2, coef, seg_starts, row_starts = [], [], [], [], []
        pos = nseg = 0
        for l1, l2, l in power_triples:
            a, b, c, w = _block_entries(l1, l2, l)
            order = np.argsort(c, kind="stable")
            a, b, c, w = a[order], b[order], c[order], w[order]
            row_starts.append(nseg)
            bounds = np.flatnonzero(np.r_[True, c[1:] != c[:-1]])
            seg_starts.extend(pos + bounds)
            nseg += len(bounds)
            pos += len(w)
            i1.append(a), i2.append(b), coef.append(w)
        self.p = (
            (np.concatenate(i1), np.concatenate(i2), np.concatenate(coef), np.array(seg_starts), np.array(row_starts))
            if power_triples
            else None
        )

    def __call__(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=complex)
        out = []
        if self.b is not None:
            i1, i2, i3, w, starts = self.b
            vals = w * coeffs[..., i1] * coeffs[..., i2] * coeffs[..., i3].conj()
            out.append(np.add.reduceat(vals, starts, axis=-1))
        if self.p is not None:
            i1, i2, w, seg, rows = self.p
            proj = np.add.reduceat(w * coeffs[..., i1] * coeffs[..., i2], seg, axis=-1)
            out.append(np.add.reduceat(np.abs(proj) ** 2, rows, axis=-1).astype(complex))
        if not out:
            return np.zeros(coeffs.shape[:-1] + (0,), dtype=complex)
        return np.concatenate(out, axis=-1)


@lru_cache(maxsize=None)
def _block_entries(l1, l2, l):
    C = cg_block(l1, l2, l)
    r, c = np.nonzero(C)
    m1, m2 = r - l1, c - l2
    return (l1 * l1 + l1 + m1, l2 * l2 + l2 + m2, l * l + l + m1 + m2, C[r, c])


@lru_cache(maxsize=256)
def _program(beta_triples: tuple, power_triples: tuple) -> _Program:
    return _Program(beta_triples, power_triples)


def _check_triple(triple, L):
    l1, l2, l = (int(x) for x in triple)
    if not admissible(l1, l2, l):
        raise InvalidParameterError(f"triple {triple} violates the triangle rule")
    if max(l1, l2, l) > L:
        raise InvalidParameterError(f"triple {triple} exceeds band limit {L}")
    return l1, l2, l


def sphere_bispectrum(f: SphSignal, triple, cg: CGTable | None = None) -> complex:
    t = _check_triple(triple, f.L)
    return complex(_program((t,), ())(f.coeffs)[0])


def cg_power(f: SphSignal, triple, cg: CGTable | None = None) -> float:
    l1, l2, l = (int(x) for x in triple)
    if not admissible(l1, l2, l):
        raise InvalidParameterError(f"triple {triple} violates the triangle rule")
    if max(l1, l2) > f.L:
        raise InvalidParameterError(f"triple {triple} exceeds band limit {f.L}")
    return float(_program((), ((l1, l2, l),))(f.coeffs)[0].real)


# ---------------------------------------------------------------- index set

_SMALL_BLOCKS = {
    4: ((1, 3, 4), (2, 2, 4), (2, 3, 4), (3, 3, 4), (1, 4, 3), (2, 4, 2), (3, 4, 1), (2, 4, 3), (3, 4, 2), (3, 4, 3)),
    5: (
        (1, 4, 5), (2, 3, 5), (2, 4, 5), (3, 4, 5), (1, 5, 4), (2, 5, 3), (3, 5, 2), (4, 5, 1), (2, 5, 4), (3, 5, 4),
        (4, 5, 4),
    ),
    6: (
        (1, 5, 6), (2, 4, 6), (3, 3, 6), (3, 4, 6), (1, 6, 5), (2, 6, 4), (3, 6, 3), (4, 6, 2), (5, 6, 1), (2, 6, 5),
        (3, 6, 5), (4, 6, 5), (5, 6, 5),
    ),
    7: (
        (1, 6, 7), (2, 5, 7), (3, 4, 7), (4, 5, 7), (1, 7, 6), (2, 7, 5), (3, 7, 4), (4, 7, 3), (5, 7, 2), (6, 7, 1),
        (2, 7, 6), (3, 7, 6), (4, 7, 6), (5, 7, 6), (6, 7, 6),
    ),
}  # fmt: skip


def small_block(l: int) -> tuple:
    """Hand-picked bootstrap block for ``4 <= l <= 7``."""
    if l not in _SMALL_BLOCKS:
        raise InvalidParameterError(f"small blocks exist for degrees 4..7, not {l}")
    return _SMALL_BLOCKS[l]


def bootstrap_block(l: int) -> tuple:
    """Linear bootstrap block of ``2l+1`` triples for ``l >= 8``.

    Three families ``(a, l, l-a)``, ``(a, l, l-a+1)`` (skipping the
    self-conjugate ``a = (l+1)/2`` at odd ``l``) and ``(a, l-a, l)`` for
    ``a <= 4``, plus ``(2, l-1, l)`` at odd ``l`` to make up the count.
    """
    if l < 8:
        raise InvalidParameterError(f"bootstrap blocks are defined for l >= 8, not {l}")
    out = [(a, l, l - a) for a in range(1, l)]
    out += [(a, l, l - a + 1) for a in range(2, l) if not (l % 2 and 2 * a == l + 1)]
    out += [(a, l - a, l) for a in range(1, 5)]
    if l % 2:
        out.append((2, l - 1, l))
    return tuple(out)


def _candidates(l: int) -> list:
    if 4 <= l <= 7:
        cands = list(small_block(l))
    elif l >= 8:
        cands = list(bootstrap_block(l))
    else:
        cands = [(1, l - 1, l)]  # chain
        if l != 2:
            cands.append((1, l, l - 1))  # cross
    power = (0, l, l)
    cands.append(power)
    if l not in (1, 2):
        cands += [(l, l, lp) for lp in range(l - 1, -1, -1)]
    if l == 2:
        cands.append((2, 2, 2))
    return cands


def _budget(l: int) -> int:
    return 10 if l == 4 else 2 * l + 1


def _seed_triples(L0: int) -> list:
    return [
        (l1, l2, l)
        for l1 in range(L0 + 1)
        for l2 in range(l1, L0 + 1)
        for l in range(l2 - l1, min(l1 + l2, L0) + 1)
    ]


def _target_rank(l: int) -> int:
    """Unknowns at degree ``l`` once lower degrees are fixed.

    ``F_0`` is one real number.  At ``l = 1`` the full rotation group acts
    on a 3-vector, leaving only its length.  At ``l = 2`` the rotations about
    the axis of ``F_1`` still act, removing one of the five directions.  From
    ``l = 3`` on the lower degrees generically have trivial stabilizer.
    """
    return {0: 1, 1: 1, 2: 4}.get(l, 2 * l + 1)


@dataclass(frozen=True, eq=False)
class SO3IndexSet:
    """Bispectral triples and CG-power triples with per-entry provenance."""

    L: int
    L_seed: int
    bispectral: tuple
    cg_power: tuple
    bispectral_tags: tuple
    cg_power_tags: tuple
    ranks: tuple = ()

    @property
    def n_bispectral(self) -> int:
        return len(self.bispectral)

    @property
    def n_cg_power(self) -> int:
        return len(self.cg_power)

    @property
    def total(self) -> int:
        return self.n_bispectral + self.n_cg_power

    def __len__(self):
        return self.total

    @cached_property
    def program(self) -> _Program:
        return _program(self.bispectral, self.cg_power)

    def restricted(self, l: int) -> "SO3IndexSet":
        """Entries whose highest input degree is ``l``."""
        keep_b = [i for i, t in enumerate(self.bispectral) if _triple_degree(t) == l]
        keep_p = [i for i, t in enumerate(self.cg_power) if _power_degree(t) == l]
        return SO3IndexSet(
            self.L,
            self.L_seed,
            tuple(self.bispectral[i] for i in keep_b),
            tuple(self.cg_power[i] for i in keep_p),
            tuple(self.bispectral_tags[i] for i in keep_b),
            tuple(self.cg_power_tags[i] for i in keep_p),
        )

    def counts(self) -> dict:
        return {"L": self.L, "bispectral": self.n_bispectral, "cg_power": self.n_cg_power, "total": self.total}


def numerical_rank(s, rank_tol: float) -> int:
    s = np.asarray(s)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s >= rank_tol * s[0]))


def _fd_rows(program, f: SphSignal, l: int) -> np.ndarray:
    """Central-difference Jacobian of ``program`` w.r.t. the real parameters of ``F_l``.

    Real and imaginary parts of every complex entry become separate rows.
    """
    p = f.params
    k = 2 * l + 1
    h = 1e-6 * (1.0 + float(np.linalg.norm(f.F(l))))
    steps = np.zeros((2 * k, p.size))
    cols = np.arange(l * l, (l + 1) ** 2)
    steps[np.arange(k), cols] = h
    steps[k + np.arange(k), cols] = -h
    vals = program(params_to_coeffs(p + steps, f.L))
    d = (vals[:k] - vals[k:]) / (2 * h)  # (k, entries)
    return np.concatenate([d.real.T, d.imag.T], axis=0)


def jacobian_per_degree(f: SphSignal, idx: SO3IndexSet, l: int):
    """Jacobian of the degree-``l`` entries of ``idx`` w.r.t. ``F_l`` and its singular values."""
    if not f.real:
        raise InvalidParameterError("the per-degree Jacobian is defined on the real-signal slice")
    if l > f.L:
        raise InvalidParameterError(f"degree {l} exceeds the witness band limit {f.L}")
    sub = idx.restricted(l)
    J = _fd_rows(_program(sub.bispectral, sub.cg_power), f, l)
    s = np.linalg.svd(J, compute_uv=False) if J.size else np.zeros(0)
    return J, s


def build_index_set(
    L: int,
    witness: SphSignal | None = None,
    rank_tol: float = 1e-8,
    seed: int = 0,
    literal_seed: bool = False,
) -> SO3IndexSet:
    """Selective index set with per-degree CG-power augmentation.

    For every degree ``l`` a ranked candidate list (chain/cross triples at
    ``l <= 3``, the small blocks at ``4 <= l <= 7``, the linear bootstrap
    block beyond, then the power entry and self-couplings) is pruned of
    triples vanishing on real signals and of duplicates, and the first
    ``budget(l)`` survivors are kept.  Even self-couplings ``(l, l, l')``
    are always added for ``l >= 3``.  Finally CG powers ``P_{l1,l,l'}``
    (ascending ``l1``, then ``l'``) are appended while they raise the rank of
    the Jacobian with respect to ``F_l`` at ``witness``, until it reaches the
    number of unknowns at that degree.

    ``literal_seed=True`` additionally inserts every admissible triple with
    degrees ``<= min(L, 4)`` before the loop, which yields more than the
    canonical 24 bispectral triples at ``L = 4``.

    Raises ``NumericDegeneracyError`` when the candidates run out before full
    rank, which signals a non-generic witness.
    """
    _check_L(L)
    if rank_tol <= 0:
        raise InvalidParameterError("rank_tol must be positive")
    if witness is None:
        witness = random_sph_signal(L, np.random.default_rng(seed))
    if not witness.real or witness.L < L:
        raise InvalidParameterError("the witness must be a real signal with band limit >= L")
    witness = witness.truncate(L)
    L_seed = min(L, L_SEED)

    beta, btags = [(0, 0, 0)], ["seed"]
    seen = {(0, 0, 0)}
    if literal_seed:
        for t in _seed_triples(L_seed):
            if t not in seen and not vanishes_on_real(t):
                beta.append(t), btags.append("seed"), seen.add(t)

    power, ptags, ranks = [], [], [(0, 1, 1)]
    for l in range(1, L + 1):
        live = []
        for t in _candidates(l):
            if vanishes_on_real(t) or t in seen or t in live:
                continue
            live.append(t)
        for t in live[: _budget(l)]:
            beta.append(t)
            seen.add(t)
            if l <= L_seed:
                btags.append("seed")
            elif t == (0, l, l):
                btags.append("power-entry")
            elif t[0] == t[1] == l:
                btags.append("self-coupling")
            else:
                btags.append("bootstrap")
        if l >= 3:
            for lp in range(2, l + 1, 2):
                if (l, l, lp) not in seen:
                    beta.append((l, l, lp)), btags.append("self-coupling"), seen.add((l, l, lp))

        # CG-power augmentation
        cur_b = tuple(t for t in beta if _triple_degree(t) == l)
        rows = _fd_rows(_program(cur_b, ()), witness, l)
        s = np.linalg.svd(rows, compute_uv=False) if rows.size else np.zeros(0)
        rank = numerical_rank(s, rank_tol)
        target = _target_rank(l)
        for l1 in range(0, l + 1):
            if rank >= target:
                break
            for lp in range(l - l1, l + l1 + 1):
                if rank >= target:
                    break
                cand = _fd_rows(_program((), ((l1, l, lp),)), witness, l)
                trial = np.concatenate([rows, cand], axis=0)
                r = numerical_rank(np.linalg.svd(trial, compute_uv=False), rank_tol)
                if r > rank:
                    rows, rank = trial, r
                    power.append((l1, l, lp)), ptags.append("cg-power")
        if rank < target:
            raise NumericDegeneracyError(
                f"degree {l}: Jacobian rank {rank} < {target} after exhausting CG-power candidates"
            )
        ranks.append((l, rank, target))

    return SO3IndexSet(L, L_seed, tuple(beta), tuple(power), tuple(btags), tuple(ptags), tuple(ranks))


def evaluate_invariant(f: SphSignal, idx: SO3IndexSet, cg: CGTable | None = None) -> np.ndarray:
    """Bispectral entries followed by CG powers, as one complex vector."""
    if f.L != idx.L:
        raise InvalidParameterError(f"index set built for L={idx.L}, signal has L={f.L}")
    return idx.program(f.coeffs)
