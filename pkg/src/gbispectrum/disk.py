"""Disk harmonics and the SO(2)-on-disk bispectrum.

A signal on the unit disk is expanded as

    f(r, theta) = sum_{n,k} a_{n,k} psi_{n,k}(r, theta),
    psi_{n,k} = c_{n,k} J_{|n|}(lambda_{|n|,k} r) exp(i n theta),

with ``lambda_{n,k}`` the ``k``-th positive root of ``J_n`` and
``c_{n,k} = 1 / (sqrt(pi) |J_{n+1}(lambda_{n,k})|)`` so that the ``psi`` are
orthonormal and ``psi_{-n,k} = conj(psi_{n,k})``; a real signal therefore
has ``a_{-n,k} = conj(a_{n,k})``.  A rotation by ``phi`` multiplies ``a_{n,k}`` by
``exp(i n phi)``, hence every product

    b = a_{n1,k1} a_{n2,k2} conj(a_{n1+n2,k3})

is rotation invariant.

The selective index set has three kinds of entries (real signals use
``n >= 0`` only):

* anchor: ``(0,1)(0,1) -> (0,k)``, which pins the invariant ``a_{0,k}``;
* chain: ``(1,1)(n,1) -> (n+1,1)`` for ``0 <= n < N_m``;
* radial: ``(0,k)(n,1) -> (n,k)`` for ``n >= 1, k >= 2``.

Complex signals add ``(1,1)(-1,1) -> (0,1)``, a downward chain and radial
entries at negative orders.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import optimize, special

from .exceptions import GenericityError, InvalidParameterError, NumericDegeneracyError

__all__ = [
    "BesselRootTable",
    "DiskBand",
    "DiskCoefficients",
    "DiskIndexSet",
    "bessel_roots",
    "rotate_disk",
    "random_disk_coefficients",
    "full_disk_index",
    "selective_disk_index",
    "disk_bispectrum",
    "invert_disk",
    "align_disk",
    "phase_align",
    "synthesize_disk",
    "analyze_disk",
]

GENERICITY_TOL = 1e-12


# ---------------------------------------------------------------- Bessel roots


def _newton_bracketed(n, lo, hi, x0, tol=1e-15, maxiter=100):
    """Newton on ``J_n`` kept inside ``[lo, hi]``; falls back to bisection steps."""
    flo = special.jv(n, lo)
    x = x0
    for _ in range(maxiter):
        fx = special.jv(n, x)
        if fx == 0.0:
            return x
        if np.sign(fx) == np.sign(flo):
            lo, flo = x, fx
        else:
            hi = x
        dfx = 0.5 * (special.jv(n - 1, x) - special.jv(n + 1, x))
        step = fx / dfx if dfx != 0 else np.inf
        xn = x - step
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= tol * max(1.0, abs(x)):
            return xn
        x = xn
    raise NumericDegeneracyError(f"Newton iteration for a root of J_{n} did not converge near {x:.6g}")


def _mcmahon(n, k):
    b = (k + 0.5 * n - 0.25) * np.pi
    mu = 4.0 * n * n
    return b - (mu - 1) / (8 * b) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * b) ** 3)


@dataclass(frozen=True, eq=False)
class BesselRootTable:
    """``roots[n, k-1]`` is the ``k``-th positive root of ``J_n``, ``0 <= n <= N_max``.

    Negative orders share the roots of ``|n|`` since ``J_{-n} = (-1)^n J_n``.
    """

    roots: np.ndarray
    norm_constants: np.ndarray

    @property
    def N_max(self) -> int:
        return self.roots.shape[0] - 1

    @property
    def K_max(self) -> int:
        return self.roots.shape[1]

    def root(self, n: int, k: int) -> float:
        return float(self.roots[abs(n), k - 1])

    def norm(self, n: int, k: int) -> float:
        return float(self.norm_constants[abs(n), k - 1])


@lru_cache(maxsize=32)
def bessel_roots(N_max: int, K_max: int) -> BesselRootTable:
    """Roots via McMahon guesses for ``J_0`` and interlacing brackets upward in ``n``.

    Zeros of ``J_n`` interlace with those of ``J_{n-1}``
    (``lambda_{n-1,k} < lambda_{n,k} < lambda_{n-1,k+1}``), so each root of
    order ``n`` is bracketed by two roots of order ``n-1`` and refined by
    safeguarded Newton.
    """
    if N_max < 0 or K_max < 1:
        raise InvalidParameterError("need N_max >= 0 and K_max >= 1")
    total = K_max + N_max + 1
    prev = np.empty(total)
    for k in range(1, total + 1):
        g = _mcmahon(0, k)
        lo = (k - 0.75) * np.pi if k > 1 else 1.0
        prev[k - 1] = _newton_bracketed(0, lo, (k + 0.25) * np.pi, g)
    rows = [prev[:K_max].copy()]
    for n in range(1, N_max + 1):
        cur = np.empty(len(prev) - 1)
        for k in range(len(cur)):
            lo, hi = prev[k], prev[k + 1]
            cur[k] = _newton_bracketed(n, lo, hi, 0.5 * (lo + hi))
        rows.append(cur[:K_max].copy())
        prev = cur
    roots = np.array(rows)
    norms = 1.0 / (np.sqrt(np.pi) * np.abs(special.jv(np.arange(N_max + 1)[:, None] + 1, roots)))
    roots.setflags(write=False)
    norms.setflags(write=False)
    return BesselRootTable(roots, norms)


# ---------------------------------------------------------------- band limits


@dataclass(frozen=True)
class DiskBand:
    """Which ``(n, k)`` slots are kept.

    ``scheme="rect"``: ``|n| <= N_m`` and ``k <= K``.
    ``scheme="fb"``: Fourier-Bessel cutoff ``lambda_{n,k} <= lambda_{0,L+1}``.
    """

    scheme: str = "rect"
    N_m: int = 8
    K: int = 4
    L: int = 0

    @classmethod
    def rect(cls, N_m: int, K: int) -> "DiskBand":
        if N_m < 1 or K < 1:
            raise InvalidParameterError("rectangular band needs N_m >= 1 and K >= 1")
        return cls("rect", N_m, K, 0)

    @classmethod
    def fourier_bessel(cls, L: int) -> "DiskBand":
        if L < 1:
            raise InvalidParameterError("Fourier-Bessel band needs L >= 1")
        return cls("fb", 0, 0, L)

    @cached_property
    def slots(self) -> tuple:
        """Sorted ``(n, k)`` pairs, ``n`` from ``-N_m`` to ``N_m``."""
        if self.scheme == "rect":
            return tuple((n, k) for n in range(-self.N_m, self.N_m + 1) for k in range(1, self.K + 1))
        if self.scheme == "fb":
            # lambda_{n,1} > n, so orders beyond the cutoff value have no slots
            table = bessel_roots(int(np.ceil(np.pi * (self.L + 1.5))), self.L + 1)
            cutoff = table.root(0, self.L + 1)
            out = []
            for n in range(-table.N_max, table.N_max + 1):
                for k in range(1, table.K_max + 1):
                    if table.root(n, k) <= cutoff * (1 + 1e-14):
                        out.append((n, k))
            return tuple(out)
        raise InvalidParameterError(f"unknown band scheme {self.scheme!r}")

    @property
    def max_order(self) -> int:
        return max(n for n, _ in self.slots)


@dataclass(frozen=True, eq=False)
class DiskCoefficients:
    """Disk-harmonic coefficients ``a_{n,k}`` over ``band.slots``."""

    entries: np.ndarray
    band: DiskBand
    real: bool = True

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex)
        if e.shape[-1:] != (len(self.band.slots),):
            raise InvalidParameterError(f"expected {len(self.band.slots)} coefficients, got {e.shape[-1:]}")
        if self.real:
            err = np.max(np.abs(e - e[..., _conj_positions(self.band)].conj()), initial=0.0)
            if err > 1e-12 * max(1.0, float(np.abs(e).max(initial=0.0))):
                raise InvalidParameterError(f"coefficients violate a_(-n,k) = conj(a_(n,k)) by {err:.3g}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def index(self) -> tuple:
        return self.band.slots

    @property
    def m(self) -> int:
        return len(self.band.slots)

    def __getitem__(self, nk):
        return self.entries[..., _positions(self.band)[nk]]


@lru_cache(maxsize=64)
def _positions(band: DiskBand) -> dict:
    return {nk: i for i, nk in enumerate(band.slots)}


@lru_cache(maxsize=64)
def _conj_positions(band: DiskBand) -> np.ndarray:
    pos = _positions(band)
    return np.array([pos[(-n, k)] for n, k in band.slots])


@lru_cache(maxsize=64)
def _orders(band: DiskBand) -> np.ndarray:
    return np.array([n for n, _ in band.slots])


def rotate_disk(c: DiskCoefficients, phi: float) -> DiskCoefficients:
    """``a_{n,k} -> exp(i n phi) a_{n,k}``, i.e. ``f(r, theta) -> f(r, theta + phi)``."""
    return DiskCoefficients(c.entries * np.exp(1j * _orders(c.band) * phi), c.band, c.real)


def random_disk_coefficients(band: DiskBand, rng: np.random.Generator, real: bool = True) -> DiskCoefficients:
    """Standard complex Gaussian coefficients; real Gaussian at ``n = 0`` for real signals."""
    m = len(band.slots)
    z = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2)
    if real:
        n = _orders(band)
        conj = _conj_positions(band)
        z = np.where(n > 0, z, np.where(n < 0, z[conj].conj(), rng.standard_normal(m)))
    return DiskCoefficients(z, band, real)


# ---------------------------------------------------------------- index sets


@dataclass(frozen=True, eq=False)
class DiskIndexSet:
    """Triples ``(j1, j2, k3)``: slot positions ``j1, j2`` and target radial index ``k3``."""

    band: DiskBand
    triples: tuple
    mode: str
    families: tuple = ()
    real: bool = True

    def __len__(self):
        return len(self.triples)

    @cached_property
    def arrays(self):
        pos = _positions(self.band)
        slots = self.band.slots
        j1 = np.array([t[0] for t in self.triples], dtype=int)
        j2 = np.array([t[1] for t in self.triples], dtype=int)
        j3 = np.array([pos[(slots[a][0] + slots[b][0], k)] for a, b, k in self.triples], dtype=int)
        return j1, j2, j3

    def family_counts(self) -> dict:
        out: dict = {}
        for f in self.families:
            out[f] = out.get(f, 0) + 1
        return out


def _validate_triple(band, t):
    pos = _positions(band)
    a, b, k3 = t
    if not (0 <= a < len(band.slots) and 0 <= b < len(band.slots)):
        raise InvalidParameterError(f"triple {t} refers to a slot outside the band")
    n = band.slots[a][0] + band.slots[b][0]
    if (n, k3) not in pos:
        raise InvalidParameterError(f"triple {t} targets ({n}, {k3}), which is outside the band")


def full_disk_index(band: DiskBand) -> DiskIndexSet:
    """Every unordered slot pair ``j1 <= j2`` with every admissible target radius."""
    slots = band.slots
    ks: dict = {}
    for n, k in slots:
        ks.setdefault(n, []).append(k)
    triples = []
    for a in range(len(slots)):
        for b in range(a, len(slots)):
            n = slots[a][0] + slots[b][0]
            for k3 in ks.get(n, ()):
                triples.append((a, b, k3))
    return DiskIndexSet(band, tuple(triples), "full")


def selective_disk_index(band: DiskBand, real: bool = True) -> DiskIndexSet:
    """Anchor, chain and radial families (see module docstring)."""
    pos = _positions(band)
    N = band.max_order
    for n in range(-N if not real else 0, N + 1):
        if (n, 1) not in pos:
            raise InvalidParameterError(f"selective index needs slot ({n}, 1)")
    if (1, 1) not in pos:
        raise InvalidParameterError("selective index needs slot (1, 1)")
    triples, fams = [], []

    def add(x, y, k3, fam):
        triples.append((pos[x], pos[y], k3))
        fams.append(fam)

    k0 = sorted(k for n, k in band.slots if n == 0)
    for k in k0:
        add((0, 1), (0, 1), k, "anchor")
    for n in range(0, N):
        add((1, 1), (n, 1), 1, "chain")
    if not real:
        add((1, 1), (-1, 1), 1, "chain")
        for n in range(1, N):
            add((-1, 1), (-n, 1), 1, "chain")
    for n, k in band.slots:
        if k >= 2 and n != 0 and (n > 0 or not real):
            if (0, k) not in pos:
                raise InvalidParameterError(f"radial family needs slot (0, {k})")
            add((0, k), (n, 1), k, "radial")
    return DiskIndexSet(band, tuple(triples), "selective", tuple(fams), real)


def disk_bispectrum(c: DiskCoefficients, idx: DiskIndexSet) -> np.ndarray:
    """``b = a_{j1} a_{j2} conj(a_{n1+n2, k3})`` for every triple of ``idx``."""
    if idx.band != c.band:
        raise InvalidParameterError("index set and coefficients use different bands")
    for t in idx.triples:
        _validate_triple(idx.band, t)
    j1, j2, j3 = idx.arrays
    e = c.entries
    return e[..., j1] * e[..., j2] * e[..., j3].conj()


# ---------------------------------------------------------------- inversion


def invert_disk(b, idx: DiskIndexSet, tol: float = GENERICITY_TOL) -> DiskCoefficients:
    """Frequency marching with the gauge ``arg a_{1,1} = 0``.

    Returns coefficients in the rotation orbit of the original; raises
    ``GenericityError`` if a coefficient used as a divisor is below ``tol``.
    """
    if idx.mode != "selective":
        raise InvalidParameterError("inversion needs a selective index set")
    b = np.asarray(b, dtype=complex)
    if b.shape[-1] != len(idx):
        raise InvalidParameterError(f"expected {len(idx)} bispectral values, got {b.shape[-1]}")
    band = idx.band
    slots = band.slots
    pos = _positions(band)
    a = np.full(b.shape[:-1] + (len(slots),), np.nan + 0j)

    def check(val, what):
        if np.any(np.abs(val) < tol):
            raise GenericityError(f"|{what}| < {tol:g}; the disk bispectrum cannot be inverted (non-generic signal)")

    for p, ((j1, j2, k3), fam) in enumerate(zip(idx.triples, idx.families)):
        x, y = slots[j1], slots[j2]
        tgt = pos[(x[0] + y[0], k3)]
        bp = b[..., p]
        if fam == "anchor":
            if k3 == 1:
                check(bp, "a_(0,1)")
                # b = |a01|^2 a01
                a[..., tgt] = bp / np.abs(bp) ** (2.0 / 3.0)
            else:
                a[..., tgt] = np.conj(bp / a[..., j1] ** 2)
        elif fam == "chain" and y == (0, 1):
            # b = a01 |a11|^2; gauge a11 > 0
            check(bp, "a_(1,1)")
            a[..., tgt] = np.sqrt(np.abs(bp / a[..., j2]))
        elif fam == "chain" and x == (1, 1) and y == (-1, 1):
            # b = a11 a(-1,1) conj(a01)
            a[..., j2] = bp / (a[..., j1] * np.conj(a[..., tgt]))
        else:
            denom = a[..., j1] * a[..., j2]
            check(denom, f"a_{x} a_{y}")
            val = np.conj(bp / denom)
            if fam == "chain":
                check(val, f"a_{(x[0] + y[0], k3)}")
            a[..., tgt] = val
    if idx.real:
        n = _orders(band)
        conj = _conj_positions(band)
        a = np.where(n < 0, a[..., conj].conj(), a)
        a = np.where(n == 0, a.real + 0j, a)
    if np.isnan(a).any():
        raise InvalidParameterError("index set does not determine every coefficient")
    return DiskCoefficients(a, band, idx.real)


def _orbit_residual(phi, ch, c, n):
    return np.linalg.norm(ch * np.exp(1j * n * phi) - c)


def phase_align(ch, c, orders, grid: int | None = None):
    """Angle minimizing ``||ch * exp(i n phi) - c||`` and the relative residual.

    Dense grid, golden-section refinement to ``1e-6`` rad, then Newton steps
    on the smooth squared residual.
    """
    ch = np.asarray(ch, dtype=complex)
    c = np.asarray(c, dtype=complex)
    n = np.asarray(orders, dtype=float)
    if grid is None:
        grid = 64 * max(1, int(np.abs(n).max()))
    phis = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    vals = np.linalg.norm(ch[None, :] * np.exp(1j * np.outer(phis, n)) - c[None, :], axis=1)
    i = int(np.argmin(vals))
    h = 2 * np.pi / grid
    res = optimize.minimize_scalar(
        _orbit_residual, bracket=(phis[i] - h, phis[i], phis[i] + h), args=(ch, c, n),
        method="golden", tol=1e-6,
    )
    phi = float(res.x) if res.fun <= vals[i] else float(phis[i])
    for _ in range(20):
        r = ch * np.exp(1j * n * phi)
        d = r - c
        g1 = 2 * np.sum((np.conj(d) * 1j * n * r).real)
        g2 = 2 * np.sum((np.abs(n * r) ** 2 - (np.conj(d) * n * n * r).real))
        if g2 <= 0:
            break
        step = g1 / g2
        phi -= step
        if abs(step) < 1e-15:
            break
    phi = float(np.mod(phi, 2 * np.pi))
    scale = np.linalg.norm(c)
    return phi, float(_orbit_residual(phi, ch, c, n) / (scale if scale > 0 else 1.0))


def align_disk(c_hat: DiskCoefficients, c: DiskCoefficients, grid: int | None = None):
    """Rotation angle minimizing ``||rotate(c_hat, phi) - c|| / ||c||`` and that residual."""
    return phase_align(c_hat.entries, c.entries, _orders(c.band), grid)


# ---------------------------------------------------------------- grid utility


def _basis(band, r, theta):
    table = bessel_roots(band.max_order, max(k for _, k in band.slots))
    R, T = np.meshgrid(r, theta, indexing="ij")
    out = np.empty((len(band.slots),) + R.shape, dtype=complex)
    for i, (n, k) in enumerate(band.slots):
        lam = table.root(n, k)
        out[i] = table.norm(n, k) * special.jv(abs(n), lam * R) * np.exp(1j * n * T)
    return out


def synthesize_disk(c: DiskCoefficients, nr: int = 64, ntheta: int = 128):
    """Evaluate the expansion on a polar grid; returns ``(r, theta, values)``."""
    r = (np.arange(nr) + 0.5) / nr
    theta = np.linspace(0, 2 * np.pi, ntheta, endpoint=False)
    vals = np.tensordot(c.entries, _basis(c.band, r, theta), axes=(0, 0))
    return r, theta, vals


def analyze_disk(values, band: DiskBand, real: bool = True) -> DiskCoefficients:
    """Midpoint/trapezoid projection of polar-grid samples onto the disk harmonics.

    Low accuracy (a few digits); meant for demos only.
    """
    values = np.asarray(values)
    nr, ntheta = values.shape
    r = (np.arange(nr) + 0.5) / nr
    theta = np.linspace(0, 2 * np.pi, ntheta, endpoint=False)
    w = r[:, None] * (1.0 / nr) * (2 * np.pi / ntheta)
    B = _basis(band, r, theta)
    a = np.tensordot(B.conj(), values * w, axes=([1, 2], [0, 1]))
    if real:
        n = _orders(band)
        conj = _conj_positions(band)
        a = 0.5 * (a + a[conj].conj())
        a = np.where(n == 0, a.real + 0j, a)
    return DiskCoefficients(a, band, real)
