"""Uniform wrappers around the seven group/domain pairs.

Every model exposes ``random_signal``, ``actions``, ``act``, ``forward``,
``counts`` and, where an algebraic or optimization-based inverse exists,
``invert`` and ``align``.  The harness and the command line only talk to
models through this interface.
"""

from __future__ import annotations

import numpy as np

from . import disk as _disk
from . import finite as _finite
from . import so3 as _so3
from .exceptions import InvalidParameterError, InvalidStateError
from .fourier import fourier_abelian, translate
from .groups import CGCache, build_cyclic, build_dihedral, build_octahedral, build_torus
from .reconstruct import ReconstructConfig, align_orbit, reconstruct
from .wigner import MAX_DEGREE, random_euler, wigner_d

__all__ = [
    "Model",
    "CnonCn",
    "SO2onS1",
    "TorusOnTorus",
    "DnonDn",
    "OctaonOcta",
    "SO2onDisk",
    "SO3onS2",
    "MODULES",
    "make_model",
]

EXHAUSTIVE_LIMIT = 64


class Model:
    key = ""
    has_full = False
    invertible = False
    continuous = False

    def size(self) -> dict:
        raise NotImplementedError

    def random_signal(self, rng, real: bool = True):
        raise NotImplementedError

    def actions(self, rng, count: int = 32) -> list:
        raise NotImplementedError

    def act(self, signal, action):
        raise NotImplementedError

    def forward(self, signal, selective: bool = True) -> np.ndarray:
        raise NotImplementedError

    def counts(self) -> dict:
        raise NotImplementedError

    def invert(self, beta):
        raise InvalidStateError(f"inversion is not available for {self.key}")

    def align(self, estimate, signal):
        """Group element bringing ``estimate`` closest to ``signal`` and the relative residual."""
        raise InvalidStateError(f"alignment is not available for {self.key}")


class _FiniteModel(Model):
    def __init__(self, group, irreps):
        self.group, self.irreps = group, irreps
        self.cg = None if irreps.is_abelian else CGCache(irreps)
        self._sel = None
        self._full = None

    @property
    def selective_index(self):
        if self._sel is None:
            self._sel = _finite.selective_index(self.irreps)
        return self._sel

    @property
    def full_index(self):
        if self._full is None:
            self._full = _finite.full_index(self.irreps)
        return self._full

    def random_signal(self, rng, real: bool = True):
        x = rng.standard_normal(self.group.order)
        if not real:
            x = x + 1j * rng.standard_normal(self.group.order)
        return x

    def actions(self, rng, count: int = 32) -> list:
        if self.group.order <= EXHAUSTIVE_LIMIT:
            return list(range(self.group.order))
        return [int(g) for g in rng.choice(self.group.order, size=min(count, self.group.order), replace=False)]

    def act(self, signal, action):
        return translate(signal, self.group, action)

    def forward(self, signal, selective: bool = True) -> np.ndarray:
        if not selective and not self.has_full:
            raise InvalidParameterError(f"{self.key} has no full mode")
        idx = self.selective_index if selective else self.full_index
        return _finite.bispectrum(signal, self.irreps, idx, self.cg).flattened

    def counts(self) -> dict:
        return {
            "selective": self.selective_index.scalar_count,
            "full": _finite.full_index(self.irreps).scalar_count,
        }

    def invert(self, beta):
        if not self.invertible:
            return super().invert(beta)
        return _finite.invert_abelian(beta, self.selective_index, self.irreps, real=True)

    def align(self, estimate, signal):
        signal = np.asarray(signal)
        shifted = np.asarray(estimate)[..., self.group.cayley]  # row g = translate(estimate, g)
        res = np.linalg.norm(shifted - signal, axis=-1) / np.linalg.norm(signal)
        g = int(np.argmin(res))
        return g, float(res[g])


class CnonCn(_FiniteModel):
    key = "cn"
    has_full = True
    invertible = True

    def __init__(self, n: int = 8):
        self.n = n
        super().__init__(*build_cyclic(n))

    def size(self):
        return {"n": self.n}


class TorusOnTorus(_FiniteModel):
    key = "torus"
    has_full = True
    invertible = True

    def __init__(self, a: int = 4, b: int = 4):
        self.a, self.b = a, b
        super().__init__(*build_torus(a, b))

    def size(self):
        return {"a": self.a, "b": self.b}


class DnonDn(_FiniteModel):
    key = "dn"
    has_full = True

    def __init__(self, n: int = 4):
        self.n = n
        super().__init__(*build_dihedral(n))

    def size(self):
        return {"n": self.n}


class OctaonOcta(_FiniteModel):
    key = "octa"
    has_full = True

    def __init__(self):
        super().__init__(*build_octahedral())

    def size(self):
        return {}


class SO2onS1(CnonCn):
    """Band-limited real signals on the circle, frequencies ``0..L``.

    Signals are stored as their ``2L+1`` equispaced samples.  The
    nonnegative Fourier coefficients are treated as a signal on ``C_{L+1}``
    whose selective chain ``(1, k) -> k+1`` never wraps, so it is invariant
    under every rotation angle, not only multiples of ``2 pi / (2L+1)``.  The
    full mode keeps pairs ``i <= j`` with ``i + j <= L``.
    """

    key = "so2s1"
    continuous = True

    def __init__(self, L: int = 8):
        if not isinstance(L, (int, np.integer)) or L < 1:
            raise InvalidParameterError(f"band limit must be a positive integer, got {L!r}")
        self.L = int(L)
        super().__init__(self.L + 1)
        pairs = tuple((i, j) for i in range(self.L + 1) for j in range(i, self.L + 1 - i))
        self._full = _finite.FiniteIndexSet(pairs, self.irreps.dims, "full", False)

    def size(self):
        return {"L": self.L}

    @property
    def samples(self) -> int:
        return 2 * self.L + 1

    def coefficients(self, signal) -> np.ndarray:
        return np.fft.rfft(np.asarray(signal, dtype=float), axis=-1)[..., : self.L + 1]

    def _from_coefficients(self, c) -> np.ndarray:
        c = np.array(c, dtype=complex)
        c[..., 0] = c[..., 0].real
        return np.fft.irfft(c, n=self.samples, axis=-1)

    def random_signal(self, rng, real: bool = True):
        return rng.standard_normal(self.samples)

    def actions(self, rng, count: int = 32) -> list:
        return list(rng.uniform(0, 2 * np.pi, size=count))

    def act(self, signal, action):
        """Rotate by ``action`` radians: ``f(x) -> f(x + phi)``."""
        k = np.arange(self.L + 1)
        return self._from_coefficients(self.coefficients(signal) * np.exp(1j * k * action))

    def forward(self, signal, selective: bool = True) -> np.ndarray:
        c = self.coefficients(signal)
        idx = self.selective_index if selective else self._full
        return _finite._abelian_values(c, self.irreps, idx.pairs)

    def counts(self) -> dict:
        return {"selective": self.selective_index.scalar_count, "full": self._full.scalar_count}

    def invert(self, beta):
        # the phase of c_1 is a genuine rotation here, so the complex gauge suffices
        x = _finite.invert_abelian(beta, self.selective_index, self.irreps, real=False)
        return self._from_coefficients(fourier_abelian(x, self.irreps))

    def align(self, estimate, signal):
        # rfft weights make the coefficient norm equal the sample norm up to a constant
        w = np.full(self.L + 1, np.sqrt(2.0))
        w[0] = 1.0
        k = np.arange(self.L + 1)
        return _disk.phase_align(w * self.coefficients(estimate), w * self.coefficients(signal), k)


class SO2onDisk(Model):
    key = "disk"
    has_full = True
    invertible = True
    continuous = True

    def __init__(self, N_m: int = 8, K: int = 4, L: int | None = None):
        self.band = _disk.DiskBand.fourier_bessel(L) if L is not None else _disk.DiskBand.rect(N_m, K)
        self._sel = _disk.selective_disk_index(self.band)
        self._full = None

    def size(self):
        b = self.band
        return {"L": b.L} if b.scheme == "fb" else {"N_m": b.N_m, "K": b.K}

    @property
    def full_index(self):
        if self._full is None:
            self._full = _disk.full_disk_index(self.band)
        return self._full

    def random_signal(self, rng, real: bool = True):
        return _disk.random_disk_coefficients(self.band, rng, real=True)

    def actions(self, rng, count: int = 32) -> list:
        return list(rng.uniform(0, 2 * np.pi, size=count))

    def act(self, signal, action):
        return _disk.rotate_disk(signal, action)

    def forward(self, signal, selective: bool = True) -> np.ndarray:
        return _disk.disk_bispectrum(signal, self._sel if selective else self.full_index)

    def counts(self) -> dict:
        return {"selective": len(self._sel), "full": len(self.full_index), "coefficients": len(self.band.slots)}

    def invert(self, beta):
        return _disk.invert_disk(beta, self._sel)

    def align(self, estimate, signal):
        return _disk.align_disk(estimate, signal)


class SO3onS2(Model):
    key = "so3"
    has_full = True
    invertible = True
    continuous = True

    def __init__(self, L: int = 4, seed: int = 0, reconstruct_config: ReconstructConfig | None = None):
        if not isinstance(L, (int, np.integer)) or not 1 <= L <= MAX_DEGREE:
            raise InvalidParameterError(f"band limit must be an integer in [1, {MAX_DEGREE}], got {L!r}")
        self.L = int(L)
        self.index = _so3.build_index_set(self.L, seed=seed)
        self.config = reconstruct_config or ReconstructConfig()
        self._full = None

    def size(self):
        return {"L": self.L}

    @property
    def full_triples(self) -> tuple:
        """Every admissible triple ``l1 <= l2`` that does not vanish on real signals."""
        if self._full is None:
            L = self.L
            self._full = tuple(
                (l1, l2, l)
                for l1 in range(L + 1)
                for l2 in range(l1, L + 1)
                for l in range(l2 - l1, min(l1 + l2, L) + 1)
                if not _so3.vanishes_on_real((l1, l2, l))
            )
        return self._full

    def random_signal(self, rng, real: bool = True):
        return _so3.random_sph_signal(self.L, rng, real=real)

    def actions(self, rng, count: int = 32) -> list:
        return [random_euler(rng) for _ in range(count)]

    def act(self, signal, action):
        return _so3.rotate_sphere(signal, wigner_d(self.L, *action))

    def forward(self, signal, selective: bool = True) -> np.ndarray:
        if selective:
            return _so3.evaluate_invariant(signal, self.index)
        return _so3._program(self.full_triples, ())(signal.coeffs)

    def counts(self) -> dict:
        c = self.index.counts()
        return {"selective": c["total"], "bispectral": c["bispectral"], "cg_power": c["cg_power"],
                "full": len(self.full_triples)}

    def invert(self, beta):
        return reconstruct(beta, self.L, self.config, self.index).signal

    def align(self, estimate, signal):
        rot, res = align_orbit(estimate, signal)
        return rot.angles, res


MODULES = {
    "cn": CnonCn,
    "so2s1": SO2onS1,
    "torus": TorusOnTorus,
    "dn": DnonDn,
    "octa": OctaonOcta,
    "disk": SO2onDisk,
    "so3": SO3onS2,
}

ALIASES = {
    "cnoncn": "cn",
    "so2ons1": "so2s1",
    "torusontorus": "torus",
    "dnondn": "dn",
    "dihedral": "dn",
    "octaonocta": "octa",
    "octahedral": "octa",
    "so2ondisk": "disk",
    "so3ons2": "so3",
}


def canonical_key(name: str) -> str:
    key = name.lower().replace("-", "").replace("_", "")
    key = ALIASES.get(key, key)
    if key not in MODULES:
        raise InvalidParameterError(f"unknown module {name!r}; choose from {sorted(MODULES)}")
    return key


def make_model(name: str, **size) -> Model:
    cls = MODULES[canonical_key(name)]
    size = {k: v for k, v in size.items() if v is not None}
    return cls(**size)
