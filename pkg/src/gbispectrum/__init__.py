"""Selective and full G-bispectra for finite groups, the disk and the sphere."""

from .clebsch import CGTable, cg_block, cg_coefficient
from .disk import (
    DiskBand,
    DiskCoefficients,
    bessel_roots,
    disk_bispectrum,
    full_disk_index,
    invert_disk,
    selective_disk_index,
)
from .exceptions import (
    BispectrumError,
    GenericityError,
    InvalidParameterError,
    InvalidStateError,
    NumericDegeneracyError,
)
from .finite import (
    bispectrum,
    full_bispectrum,
    full_index,
    invert_abelian,
    selective_bispectrum,
    selective_index,
)
from .fourier import inverse_fourier, translate
from .groups import CGCache, build_cyclic, build_dihedral, build_octahedral, build_torus
from .models import make_model
from .reconstruct import ReconstructConfig, align_orbit
from .so3 import (
    SphSignal,
    build_index_set,
    cg_power,
    evaluate_invariant,
    parity_transform,
    random_sph_signal,
    rotate_sphere,
    sphere_bispectrum,
)
from .wigner import wigner_d

__version__ = "0.1.0"
