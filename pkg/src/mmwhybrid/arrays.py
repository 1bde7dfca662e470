"""Antenna array geometry and DFT beam dictionaries.

Both link ends carry half-wavelength uniform linear arrays.  The base
station drives M antennas from M_RF chains, either through a fully
connected (FC) phasing network or through one dedicated subarray per
chain (OSPS).  Beam dictionaries are oversampled DFT matrices whose
columns sample the sine-angle grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Architecture(str, Enum):
    """Transmitter analog front-end topology."""

    FC = "FC"
    OSPS = "OSPS"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            for member in cls:
                if member.value.lower() == value.lower():
                    return member
        return None


@dataclass(frozen=True)
class ArrayConfig:
    """Antenna counts and RF-chain counts for one BS/UE link.

    ``bs_antennas`` is the total BS aperture M; with OSPS each RF chain
    owns a contiguous block of ``subarray_size`` antennas.  The number of
    simultaneously served users equals ``bs_rf_chains``.
    """

    bs_antennas: int = 32
    bs_rf_chains: int = 2
    ue_antennas: int = 16
    ue_rf_chains: int = 1
    architecture: Architecture = Architecture.FC

    def __post_init__(self):
        for name in ("bs_antennas", "bs_rf_chains", "ue_antennas", "ue_rf_chains"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.bs_rf_chains > self.bs_antennas:
            raise ValueError("bs_rf_chains cannot exceed bs_antennas")
        if self.ue_rf_chains > self.ue_antennas:
            raise ValueError("ue_rf_chains cannot exceed ue_antennas")
        arch = Architecture(self.architecture)
        object.__setattr__(self, "architecture", arch)
        if arch is Architecture.OSPS and self.bs_antennas % self.bs_rf_chains != 0:
            raise ValueError(
                f"OSPS needs bs_antennas divisible by bs_rf_chains: "
                f"{self.bs_antennas} % {self.bs_rf_chains} != 0"
            )

    @property
    def subarray_size(self) -> int:
        """Antennas driven per RF chain: M for FC, M/M_RF for OSPS."""
        if self.architecture is Architecture.FC:
            return self.bs_antennas
        return self.bs_antennas // self.bs_rf_chains

    @property
    def num_users(self) -> int:
        """Scheduled users per frame; one stream per RF chain."""
        return self.bs_rf_chains


def array_response(angle: float, count: int) -> np.ndarray:
    """Steering vector of a half-wavelength ULA.

    Element d (0-based) is exp(j*pi*d*sin(angle)); all entries are unit
    modulus so the squared norm equals ``count``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    return np.exp(1j * np.pi * np.arange(count) * np.sin(angle))


def dft_dictionary(rows: int, cols: int) -> np.ndarray:
    """Beam dictionary with ``cols`` beams over the sine-angle grid.

    Entry (i, j), 0-based, is exp(j*2*pi*i*(j/cols - 1/2)) / sqrt(cols).
    Square dictionaries are unitary; with rows < cols the rows stay
    orthonormal (a tight frame), which is the shape used by an OSPS
    subarray that still resolves the full-aperture beam grid.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    if cols < rows:
        raise ValueError(f"beam dictionary needs cols >= rows, got {rows}x{cols}")
    i = np.arange(rows)[:, None]
    j = np.arange(cols)[None, :]
    return np.exp(2j * np.pi * i * (j / cols - 0.5)) / np.sqrt(cols)


@dataclass(frozen=True)
class BeamDictionary:
    """UE- and BS-side beam dictionaries for one array configuration.

    ``ue`` is the square N x N dictionary; ``bs`` has subarray_size rows
    and M columns, so both architectures index the same M-point AoD grid.
    """

    config: ArrayConfig
    ue: np.ndarray
    bs: np.ndarray

    @classmethod
    def for_config(cls, config: ArrayConfig) -> "BeamDictionary":
        ue = dft_dictionary(config.ue_antennas, config.ue_antennas)
        bs = dft_dictionary(config.subarray_size, config.bs_antennas)
        return cls(config=config, ue=ue, bs=bs)


def grid_angle(index: int, size: int) -> float:
    """Physical angle (radians) of 1-based beam ``index`` on a ``size`` grid.

    The grid is uniform in sin(angle): sin = 2*(index-1)/size - 1.
    """
    if not 1 <= index <= size:
        raise ValueError(f"beam index {index} outside [1, {size}]")
    return float(np.arcsin(2.0 * (index - 1) / size - 1.0))


def nearest_grid_index(angle: float, size: int) -> int:
    """1-based index of the grid beam closest to ``angle`` in sine space.

    The beam grid wraps: sin = +1 aliases onto the sin = -1 beam.
    """
    frac = size * (1.0 + np.sin(angle)) / 2.0
    return int(np.rint(frac)) % size + 1
