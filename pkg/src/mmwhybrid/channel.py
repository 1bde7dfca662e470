"""Geometric multipath channel with per-path Rice fading.

Each user sees a small number of discrete paths.  A path carries an
average strength gamma, a Rice factor eta splitting that strength
between a fixed specular part and a Rayleigh part, an AoA at the UE and
an AoD at the BS.  Gains are redrawn independently per coherence block
(block fading); Doppler rotates the gain at a fixed time reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .arrays import Architecture, ArrayConfig, BeamDictionary, array_response, grid_angle, nearest_grid_index


@dataclass(frozen=True)
class MultipathComponent:
    """One propagation path between the BS and a user.

    ``aoa_index``/``aod_index`` are 1-based beam-grid indices (UE grid of
    size N, BS grid of size M).  ``aoa``/``aod`` are the physical angles;
    for on-grid scenarios they equal the grid angles of the indices.
    ``phase`` is a fixed unit-modulus rotation folded in at scenario
    build time (carrier-times-delay), and ``doppler_hz`` rotates the
    gain at the evaluation time reference.
    """

    strength: float
    rice_factor: float
    aoa_index: int
    aod_index: int
    aoa: float
    aod: float
    phase: complex = 1.0 + 0j
    doppler_hz: float = 0.0
    delay_s: float = 0.0

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("path strength must be non-negative")
        if self.rice_factor < 0:
            raise ValueError("rice factor must be non-negative")


def on_grid_path(strength: float, rice_factor: float, aoa_index: int, aod_index: int,
                 ue_size: int, bs_size: int, **kw) -> MultipathComponent:
    """Build a path whose angles sit exactly on the beam grids."""
    return MultipathComponent(
        strength=strength, rice_factor=rice_factor,
        aoa_index=aoa_index, aod_index=aod_index,
        aoa=grid_angle(aoa_index, ue_size), aod=grid_angle(aod_index, bs_size), **kw)


def sample_path_gain(strength: float, rice_factor: float, rng: np.random.Generator) -> complex:
    """Draw one block-fading gain.

    The gain is sqrt(strength) * (sqrt(eta/(1+eta)) + w/sqrt(1+eta)) with
    w standard complex normal, so E|gain|^2 = strength for every eta.
    eta = 0 is pure Rayleigh, eta = inf the deterministic specular limit.
    """
    if strength < 0 or rice_factor < 0:
        raise ValueError("strength and rice_factor must be non-negative")
    amp = math.sqrt(strength)
    if math.isinf(rice_factor):
        return complex(amp)
    w = (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2.0)
    return amp * (math.sqrt(rice_factor / (1.0 + rice_factor)) + w / math.sqrt(1.0 + rice_factor))


def sample_path_gains(paths, rng: np.random.Generator) -> np.ndarray:
    """Vector of fresh block-fading gains, one per path."""
    return np.array([sample_path_gain(p.strength, p.rice_factor, rng) for p in paths])


def channel_matrix(paths, gains, config: ArrayConfig, time_ref: float = 0.0) -> np.ndarray:
    """N x M channel for one user at ``time_ref`` within a coherence block.

    Sum over paths of gain * exp(j*2*pi*doppler*t) * a_R(aoa) a_T(aod)^H,
    using full-aperture M-element BS steering vectors; OSPS slices
    columns per subarray downstream.
    """
    n, m = config.ue_antennas, config.bs_antennas
    h = np.zeros((n, m), dtype=complex)
    for path, g in zip(paths, gains):
        rot = g * path.phase
        if path.doppler_hz:
            rot *= np.exp(2j * np.pi * path.doppler_hz * time_ref)
        h += rot * np.outer(array_response(path.aoa, n), array_response(path.aod, m).conj())
    return h


def beamspace_transform(h: np.ndarray, config: ArrayConfig, dictionary: BeamDictionary | None = None) -> np.ndarray:
    """Project a channel onto the beam dictionaries.

    FC returns the N x M beamspace matrix F_ue^H @ H @ F_bs.  OSPS
    returns one N x M sheet per subarray, stacked on axis 0, since each
    RF chain only observes its own block of columns.
    """
    dic = dictionary or BeamDictionary.for_config(config)
    if config.architecture is Architecture.FC:
        return dic.ue.conj().T @ h @ dic.bs
    d = config.subarray_size
    sheets = [dic.ue.conj().T @ h[:, i * d:(i + 1) * d] @ dic.bs
              for i in range(config.bs_rf_chains)]
    return np.stack(sheets)


def true_beamspace_stats(paths, config: ArrayConfig) -> np.ndarray:
    """Second-moment beamspace map consistent with the training model.

    For paths exactly on the grids this is the N x M matrix with
    N*M*strength at each path's (aoa_index, aod_index) cell and zeros
    elsewhere, for either architecture.
    """
    n, m = config.ue_antennas, config.bs_antennas
    gamma = np.zeros((n, m))
    for p in paths:
        gamma[p.aoa_index - 1, p.aod_index - 1] += n * m * p.strength
    return gamma


def beamspace_power_profile(paths, config: ArrayConfig, dictionary: BeamDictionary | None = None) -> np.ndarray:
    """Expected per-cell beamspace power of a user's channel.

    Entry (n, m) is sum over paths of strength * |(F_ue^H a_R)_n|^2 *
    |(F_bs^H a_T)_m|^2 with subarray-sized BS steering, i.e. what an
    ideal estimator of the angular power map converges to.  On-grid FC
    scenarios reduce to :func:`true_beamspace_stats`.
    """
    dic = dictionary or BeamDictionary.for_config(config)
    n, m = config.ue_antennas, config.bs_antennas
    out = np.zeros((n, m))
    d = config.subarray_size
    for p in paths:
        ue_gain = np.abs(dic.ue.conj().T @ array_response(p.aoa, n)) ** 2
        bs_gain = np.abs(dic.bs.conj().T @ array_response(p.aod, d)) ** 2 * (m / d)
        out += p.strength * np.outer(ue_gain, bs_gain)
    return out


@dataclass(frozen=True)
class Scenario:
    """Physical setup shared by the training and data phases.

    ``profile`` lists (strength, rice_factor) per path, strongest first
    by convention of the default profile.  ``angle_mode`` selects whether
    drawn angles snap to the beam grids ("grid") or fall anywhere in
    sine space ("continuous", indices then record the nearest beams).
    ``min_aod_separation`` is the scheduler's spacing, in grid steps,
    between the strongest-path AoDs of scheduled users.
    ``beacon_coherence_blocks`` is how many fading coherence intervals
    one beacon slot spans; the receiver averages its power measurements
    over them.
    """

    config: ArrayConfig = field(default_factory=ArrayConfig)
    profile: tuple = ((1.0, 100.0), (0.6, 10.0), (0.6, 0.0))
    angle_mode: str = "grid"
    min_aod_separation: int | None = None
    carrier_hz: float = 40e9
    bandwidth_hz: float = 0.8e9
    noise_psd: float = 1.25e-9
    beacon_coherence_blocks: int = 3
    delay_spread_s: float = 1e-7

    def __post_init__(self):
        if self.angle_mode not in ("grid", "continuous"):
            raise ValueError(f"angle_mode must be 'grid' or 'continuous', got {self.angle_mode!r}")
        if not self.profile:
            raise ValueError("profile needs at least one path")
        if self.beacon_coherence_blocks < 1:
            raise ValueError("beacon_coherence_blocks must be positive")

    @property
    def noise_power(self) -> float:
        """Thermal noise power over the full signalling bandwidth."""
        return self.noise_psd * self.bandwidth_hz

    @property
    def total_strength(self) -> float:
        return sum(g for g, _ in self.profile)

    @property
    def aod_separation(self) -> int:
        if self.min_aod_separation is not None:
            return self.min_aod_separation
        return math.ceil(self.config.bs_antennas / 4)

    def with_architecture(self, architecture) -> "Scenario":
        return replace(self, config=replace(self.config, architecture=Architecture(architecture)))


def _draw_indexed_angles(rng, count: int, size: int, mode: str):
    """Draw ``count`` (index, angle) pairs with distinct grid indices."""
    if count > size:
        raise ValueError("cannot draw more distinct beams than grid points")
    indices: list[int] = []
    angles: list[float] = []
    while len(indices) < count:
        if mode == "grid":
            idx = int(rng.integers(1, size + 1))
            ang = grid_angle(idx, size)
        else:
            ang = float(np.arcsin(rng.uniform(-1.0, 1.0)))
            idx = nearest_grid_index(ang, size)
        if idx in indices:
            continue
        indices.append(idx)
        angles.append(ang)
    return indices, angles


def draw_user_paths(scenario: Scenario, rng: np.random.Generator):
    """Draw one user's paths per the scenario profile.

    Paths get distinct AoA indices and distinct AoD indices so the
    strongest cell of the angular map is unambiguous.  Each path also
    gets a propagation delay, ordered so the strongest (typically
    specular) path arrives first; the carrier rotation over that delay
    is folded into the path's fixed phase.
    """
    cfg = scenario.config
    count = len(scenario.profile)
    aoa_idx, aoa = _draw_indexed_angles(rng, count, cfg.ue_antennas, scenario.angle_mode)
    aod_idx, aod = _draw_indexed_angles(rng, count, cfg.bs_antennas, scenario.angle_mode)
    delays = np.sort(rng.uniform(0.0, scenario.delay_spread_s, count))
    return [
        MultipathComponent(strength=g, rice_factor=eta,
                           aoa_index=aoa_idx[i], aod_index=aod_idx[i],
                           aoa=aoa[i], aod=aod[i],
                           phase=np.exp(-2j * np.pi * scenario.carrier_hz * delays[i]),
                           delay_s=float(delays[i]))
        for i, (g, eta) in enumerate(scenario.profile)
    ]


def strongest_path(paths) -> MultipathComponent:
    """Path with the largest average strength; first wins ties."""
    best = paths[0]
    for p in paths[1:]:
        if p.strength > best.strength:
            best = p
    return best


def _circular_distance(a: int, b: int, size: int) -> int:
    d = abs(a - b) % size
    return min(d, size - d)


def draw_scheduled_users(scenario: Scenario, rng: np.random.Generator, max_tries: int = 1000):
    """Draw paths for all scheduled users with separated strongest AoDs.

    The scheduler keeps the users' strongest-path AoD indices at least
    ``scenario.aod_separation`` grid steps apart (circularly, matching
    the beam grid's wrap in sine space).  Users violating the spacing
    are redrawn.
    """
    cfg = scenario.config
    sep = scenario.aod_separation
    users = []
    taken: list[int] = []
    for _ in range(cfg.num_users):
        for attempt in range(max_tries):
            paths = draw_user_paths(scenario, rng)
            lead = strongest_path(paths).aod_index
            if all(_circular_distance(lead, t, cfg.bs_antennas) >= sep for t in taken):
                users.append(paths)
                taken.append(lead)
                break
        else:
            raise RuntimeError("scheduler could not separate users; separation too large?")
    return users
