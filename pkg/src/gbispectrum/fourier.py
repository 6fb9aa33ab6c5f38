"""Fourier transform on finite groups.

Signals are arrays whose last axis runs over group elements; any leading axes
are treated as a batch.  The transform of a signal is a list of blocks, one
``(..., d_i, d_i)`` array per irrep, with

    F_i = sum_g signal(g) rho_i(g)^H.

Translation follows the left-action convention ``(f o g)(x) = f(g x)``, under
which ``F_i(f o g) = F_i(f) rho_i(g)``: the representation factor lands on the
right.
"""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidParameterError
from .groups import FiniteGroup, IrrepSet

__all__ = ["fourier", "fourier_abelian", "inverse_fourier", "translate"]


def _check_signal(signal, group: FiniteGroup):
    signal = np.asarray(signal)
    if signal.shape[-1:] != (group.order,):
        raise InvalidParameterError(
            f"signal has trailing length {signal.shape[-1:]} but {group.name} has order {group.order}"
        )
    return signal


def fourier_abelian(signal, irreps: IrrepSet, dense: bool = False) -> np.ndarray:
    """Fourier coefficients of an abelian group as one ``(..., r)`` array.

    Cyclic groups and tori go through ``numpy.fft`` unless ``dense`` is set,
    in which case the character table is applied as a matrix.
    """
    if not irreps.is_abelian:
        raise InvalidParameterError(f"{irreps.group.name} is not abelian")
    signal = _check_signal(signal, irreps.group)
    shape = irreps.fft_shape
    if shape is not None and not dense:
        batch = signal.shape[:-1]
        axes = tuple(range(-len(shape), 0))
        return np.fft.fftn(signal.reshape(batch + shape), axes=axes).reshape(batch + (-1,))
    return signal @ irreps._onedim_stack.conj().T


def fourier(signal, irreps: IrrepSet) -> list:
    """Blocks ``F_i = sum_g signal(g) rho_i(g)^H`` for every irrep."""
    signal = _check_signal(signal, irreps.group)
    if irreps.is_abelian:
        F = fourier_abelian(signal, irreps)
        return [F[..., i, None, None] for i in range(len(irreps))]
    return [np.einsum("...g,gba->...ab", signal, m.conj()) for m in irreps.matrices]


def inverse_fourier(blocks, irreps: IrrepSet) -> np.ndarray:
    """Plancherel inversion ``f(g) = (1/|G|) sum_i d_i tr(rho_i(g) F_i)``."""
    if len(blocks) != len(irreps):
        raise InvalidParameterError(f"expected {len(irreps)} blocks, got {len(blocks)}")
    out = None
    for F, m, d in zip(blocks, irreps.matrices, irreps.dims):
        F = np.asarray(F)
        if F.shape[-2:] != (d, d):
            raise InvalidParameterError(f"block of shape {F.shape[-2:]} for a {d}-dimensional irrep")
        term = d * np.einsum("gab,...ba->...g", m, F)
        out = term if out is None else out + term
    return out / irreps.group.order


def translate(signal, group: FiniteGroup, g: int) -> np.ndarray:
    """Left translate: ``out[..., x] = signal[..., g * x]``."""
    signal = _check_signal(signal, group)
    if not 0 <= g < group.order:
        raise InvalidParameterError(f"element index {g} out of range for {group.name}")
    return signal[..., group.cayley[g]]
