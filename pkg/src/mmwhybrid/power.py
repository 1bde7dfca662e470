"""Transmitter hardware power model: dividers, combiners, PA efficiency.

The analog network between the RF chains and the antennas dissipates
power in signal dividers and combiners, and the amount depends on the
architecture.  A fully-connected (FC) network splits every chain across
all M antennas and recombines M_RF branches per antenna; a
one-stream-per-subarray (OSPS) network splits each chain only across its
own D = M/M_RF antennas and needs no combiners.  On top of that sits a
class-B style power amplifier model whose consumption grows with the
square root of the radiated power, and waveform-dependent input back-off
that keeps the PA out of saturation.

Two deployment options are compared.  Under option 1 every architecture
and waveform reuses one reference PA and only the back-off changes, so
higher-PAPR signals radiate less.  Under option 2 each combination gets
its own PA sized so the radiated power stays fixed, and the efficiency
penalty shows up through the larger amplifier instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arrays import Architecture, ArrayConfig

# Back-off constants in dB, indexed by (architecture, waveform).  These
# are 0.9999-quantile peak-to-average power ratios of the PA input for a
# QPSK single-carrier waveform, the sum of M_RF such waveforms (the FC
# network adds streams before amplification), and OFDM, which dominates
# both sums.
BACKOFF_DB_TABLE = {
    (Architecture.OSPS, "SC"): -7.5,
    (Architecture.FC, "SC"): -9.5,
    (Architecture.OSPS, "OFDM"): -12.0,
    (Architecture.FC, "OFDM"): -12.0,
}

PAPR_PROVENANCE = (
    "back-off constants are 0.9999-quantile PAPR values: 7.5 dB for a "
    "single-carrier stream, 9.5 dB for the sum of streams in a "
    "fully-connected network, 12 dB for OFDM"
)

WAVEFORMS = ("SC", "OFDM")


class SaturationError(ValueError):
    """Radiated power would exceed the PA's saturation output."""


def db_from_linear(x: float) -> float:
    return 10.0 * math.log10(x)


def linear_from_db(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def watts_to_dbm(p: float) -> float:
    return 10.0 * math.log10(p * 1e3)


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class PAModel:
    """Square-root power amplifier: consumption (sqrt(p_max)/eta_max)*sqrt(p_rad).

    ``p_max`` is the saturation output power in Watts and ``eta_max`` the
    efficiency reached there, so efficiency degrades as sqrt(p_rad/p_max)
    when the operating point backs away from saturation.
    """

    p_max: float = 4.0e-3
    eta_max: float = 0.3

    def __post_init__(self):
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        if not 0 < self.eta_max <= 1:
            raise ValueError("eta_max must be in (0, 1]")


@dataclass(frozen=True)
class BackoffProfile:
    """Input back-off applied by one (architecture, waveform) transmitter."""

    architecture: Architecture
    waveform: str
    alpha_off_db: float

    def __post_init__(self):
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"waveform must be one of {WAVEFORMS}")
        if self.alpha_off_db > 0:
            raise ValueError("back-off cannot exceed 0 dB (alpha_off <= 1)")

    @property
    def alpha_off(self) -> float:
        return linear_from_db(self.alpha_off_db)

    @property
    def label(self) -> str:
        return f"{self.architecture.value},{self.waveform}"


def backoff_for(architecture, waveform: str) -> BackoffProfile:
    """Look up the fixed back-off for an (architecture, waveform) pair."""
    arch = Architecture(architecture)
    wf = waveform.upper()
    try:
        alpha_db = BACKOFF_DB_TABLE[(arch, wf)]
    except KeyError:
        raise ValueError(f"no back-off tabulated for ({arch.value}, {waveform})") from None
    return BackoffProfile(arch, wf, alpha_db)


# The reference operating point: the lowest-PAPR combination, which
# drives the shared PA closest to saturation.
REFERENCE_PROFILE = backoff_for(Architecture.OSPS, "SC")


def divider_combiner_factors(config: ArrayConfig) -> tuple[float, float]:
    """Power loss factors (alpha_div, alpha_com) of the analog network.

    Each 1:n divider keeps 1/n of the input power per branch and each
    n:1 combiner keeps 1/n per port.  FC divides every chain M ways and
    combines M_RF branches at each antenna; OSPS divides each chain only
    D = M/M_RF ways and has no combiners.
    """
    if config.architecture is Architecture.FC:
        return 1.0 / config.bs_antennas, 1.0 / config.bs_rf_chains
    return config.bs_rf_chains / config.bs_antennas, 1.0


def beamformed_sum_power(config: ArrayConfig, epsilon: float, boosted: bool = False) -> float:
    """Sum power radiated across the array for per-stream symbol power epsilon.

    Evaluates alpha_com * alpha_div * tr(x x^H U~^H U~) for the analog
    beamformer structure of the architecture: unit-modulus weights give
    column norms ||u~_k||^2 = M (FC) or D (OSPS), so the network losses
    leave epsilon for FC and epsilon * M_RF for OSPS.  ``boosted``
    applies the FC compensation, a power factor of M_RF at the input
    that restores parity with OSPS; it is a no-op for OSPS.
    """
    if epsilon <= 0:
        raise ValueError("symbol power must be positive")
    alpha_div, alpha_com = divider_combiner_factors(config)
    if config.architecture is Architecture.FC:
        weight_norm_sq = config.bs_antennas
        boost = config.bs_rf_chains if boosted else 1.0
    else:
        weight_norm_sq = config.subarray_size
        boost = 1.0
    return alpha_com * alpha_div * config.bs_rf_chains * epsilon * weight_norm_sq * boost


def pa_consumed(p_rad: float, pa: PAModel) -> float:
    """Power consumed by the PA to radiate ``p_rad`` Watts."""
    if p_rad < 0:
        raise ValueError("radiated power must be non-negative")
    if p_rad > pa.p_max:
        raise SaturationError(
            f"radiated power {p_rad:.6g} W exceeds PA saturation {pa.p_max:.6g} W")
    return math.sqrt(pa.p_max * p_rad) / pa.eta_max


def pa_efficiency(p_rad: float, pa: PAModel) -> float:
    """Radiated over consumed power, eta_max * sqrt(p_rad / p_max)."""
    if p_rad == 0:
        return 0.0
    return p_rad / pa_consumed(p_rad, pa)


@dataclass(frozen=True)
class PowerOperatingPoint:
    """One evaluated transmitter operating point."""

    profile: BackoffProfile
    option: int
    p_rad0: float
    p_rad: float
    p_max: float
    p_cons: float
    eta_eff: float


def option1_evaluate(p_rad0: float, profile: BackoffProfile,
                     reference: BackoffProfile = REFERENCE_PROFILE,
                     pa0: PAModel | None = None) -> PowerOperatingPoint:
    """Shared-PA deployment: back-off rescales the radiated power.

    The reference combination radiates ``p_rad0``; a combination with
    more back-off radiates p_rad = (alpha_off / alpha_off0) * p_rad0 from
    the same PA, and its efficiency is sqrt(p_rad / p_max0) * eta_max0.
    """
    pa = pa0 or PAModel()
    if p_rad0 < 0:
        raise ValueError("reference radiated power must be non-negative")
    ratio = linear_from_db(profile.alpha_off_db - reference.alpha_off_db)
    p_rad = ratio * p_rad0
    p_cons = pa_consumed(p_rad, pa)
    eta_eff = p_rad / p_cons if p_cons else 0.0
    return PowerOperatingPoint(profile=profile, option=1, p_rad0=p_rad0,
                               p_rad=p_rad, p_max=pa.p_max, p_cons=p_cons,
                               eta_eff=eta_eff)


def option2_evaluate(p_rad0: float, profile: BackoffProfile,
                     reference: BackoffProfile = REFERENCE_PROFILE,
                     pa0: PAModel | None = None,
                     eta_max: float | None = None) -> PowerOperatingPoint:
    """Dedicated-PA deployment: back-off rescales the PA size instead.

    Every combination radiates the same ``p_rad0`` but from a PA sized
    p_max = (alpha_off0 / alpha_off) * p_max0, so higher-PAPR waveforms
    pay through a larger, less-utilized amplifier.  All PAs are assumed
    to reach the same maximum efficiency.
    """
    pa = pa0 or PAModel()
    eta = pa.eta_max if eta_max is None else eta_max
    scaled = PAModel(p_max=linear_from_db(reference.alpha_off_db - profile.alpha_off_db) * pa.p_max,
                     eta_max=eta)
    p_cons = pa_consumed(p_rad0, scaled)
    eta_eff = p_rad0 / p_cons if p_cons else 0.0
    return PowerOperatingPoint(profile=profile, option=2, p_rad0=p_rad0,
                               p_rad=p_rad0, p_max=scaled.p_max, p_cons=p_cons,
                               eta_eff=eta_eff)


def default_radiated_grid() -> np.ndarray:
    """Reference radiated powers swept in the efficiency tables, in Watts."""
    return np.arange(1, 9) * 0.5e-3


def power_sweep_table(pa0: PAModel | None = None,
                      p_rad0_grid=None,
                      options=(1, 2)) -> list[PowerOperatingPoint]:
    """Evaluate every (architecture, waveform) combination on the grid.

    Rows are ordered by option, then architecture/waveform in the fixed
    table order, then increasing reference power, so the output is
    deterministic.
    """
    pa = pa0 or PAModel()
    grid = default_radiated_grid() if p_rad0_grid is None else np.asarray(p_rad0_grid, dtype=float)
    evaluate = {1: option1_evaluate, 2: option2_evaluate}
    rows = []
    for option in options:
        for arch, waveform in BACKOFF_DB_TABLE:
            profile = backoff_for(arch, waveform)
            for p_rad0 in grid:
                rows.append(evaluate[option](float(p_rad0), profile, REFERENCE_PROFILE, pa))
    return rows
