"""Wigner D-matrices in the z-y-z Euler convention.

``D^l(alpha, beta, gamma) = exp(-i alpha J_z) exp(-i beta J_y) exp(-i gamma J_z)``
with rows and columns indexed ``m = -l..l``.  The little-d matrix is formed
from a cached eigendecomposition of ``J_y``, which is unitary to machine
precision at every degree used here (``l <= 32``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import InvalidParameterError

__all__ = [
    "WignerRotation",
    "wigner_d",
    "wigner_small_d",
    "euler_to_matrix",
    "matrix_to_euler",
    "compose_euler",
    "random_euler",
]

MAX_DEGREE = 32


@lru_cache(maxsize=None)
def _jy_eigh(l: int):
    m = np.arange(-l, l)
    jp = np.zeros((2 * l + 1, 2 * l + 1))
    jp[np.arange(1, 2 * l + 1), np.arange(2 * l)] = np.sqrt(l * (l + 1) - m * (m + 1))
    jy = (jp - jp.T) / 2j
    w, V = np.linalg.eigh(jy)
    return w, V


def wigner_small_d(l: int, beta: float) -> np.ndarray:
    """Real matrix ``d^l(beta)`` with ``d[m + l, m' + l] = <l m| exp(-i beta J_y) |l m'>``."""
    if l < 0 or l > MAX_DEGREE:
        raise InvalidParameterError(f"degree {l} outside 0..{MAX_DEGREE}")
    w, V = _jy_eigh(l)
    return ((V * np.exp(-1j * beta * w)) @ V.conj().T).real


def _big_d(l, alpha, beta, gamma):
    m = np.arange(-l, l + 1)
    return np.exp(-1j * m * alpha)[:, None] * wigner_small_d(l, beta) * np.exp(-1j * m * gamma)[None, :]


@dataclass(frozen=True, eq=False)
class WignerRotation:
    """A rotation and its Wigner matrices ``D^0..D^L``."""

    angles: tuple
    matrices: tuple

    @property
    def L(self) -> int:
        return len(self.matrices) - 1

    def __getitem__(self, l):
        return self.matrices[l]

    @property
    def matrix(self) -> np.ndarray:
        return euler_to_matrix(*self.angles)


def wigner_d(L: int, alpha: float, beta: float, gamma: float) -> WignerRotation:
    angles = (float(alpha), float(beta), float(gamma))
    if not all(np.isfinite(angles)):
        raise InvalidParameterError(f"non-finite Euler angles {angles}")
    if L < 0 or L > MAX_DEGREE:
        raise InvalidParameterError(f"band limit {L} outside 0..{MAX_DEGREE}")
    return WignerRotation(angles, tuple(_big_d(l, *angles) for l in range(L + 1)))


def _rz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(b):
    c, s = np.cos(b), np.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def euler_to_matrix(alpha, beta, gamma) -> np.ndarray:
    """``R = Rz(alpha) Ry(beta) Rz(gamma)``."""
    return _rz(alpha) @ _ry(beta) @ _rz(gamma)


def matrix_to_euler(R) -> tuple:
    """Inverse of :func:`euler_to_matrix`, with ``beta`` in ``[0, pi]``."""
    R = np.asarray(R, dtype=float)
    beta = float(np.arccos(np.clip(R[2, 2], -1.0, 1.0)))
    if np.sin(beta) > 1e-10:
        alpha = float(np.arctan2(R[1, 2], R[0, 2]))
        gamma = float(np.arctan2(R[2, 1], -R[2, 0]))
    else:
        # gimbal lock: only alpha +- gamma is defined
        gamma = 0.0
        if R[2, 2] > 0:
            alpha = float(np.arctan2(R[1, 0], R[0, 0]))
        else:
            alpha = float(np.arctan2(-R[1, 0], -R[0, 0]))
    return alpha, beta, gamma


def compose_euler(a, b) -> tuple:
    """Euler angles of ``R(a) R(b)``."""
    return matrix_to_euler(euler_to_matrix(*a) @ euler_to_matrix(*b))


def random_euler(rng: np.random.Generator) -> tuple:
    """Haar-distributed rotation, returned as Euler angles."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    R = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
    return matrix_to_euler(R)
