"""Beam alignment from pseudo-random beacon sweeps.

During training the BS broadcasts M_RF pilot streams per slot through
random unit-modulus beacons while each UE listens through its own
random combiners and records received powers.  Averaged over fading,
those powers are linear in the channel's angular power map Gamma, so
the UE recovers Gamma with a non-negative least-squares fit against the
known beacon codebook and picks the strongest cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import Architecture, ArrayConfig, BeamDictionary
from .channel import Scenario, array_response, draw_user_paths, strongest_path
from .rng import SWEEP_BA, substream


class ConvergenceError(RuntimeError):
    """NNLS ran out of iterations; carries the best iterate found."""

    def __init__(self, message: str, iterate: np.ndarray, kkt_violation: float):
        super().__init__(message)
        self.iterate = iterate
        self.kkt_violation = kkt_violation


@dataclass(frozen=True)
class BeaconCodebook:
    """Pseudo-random training beams for ``slots`` beacon slots.

    ``bs_vectors`` has shape (slots, M, M_RF); column i of a slot has
    unit-modulus entries on its support and squared norm subarray_size.
    For OSPS the support of column i is subarray i, for FC the full
    aperture.  ``ue_vectors`` has shape (slots, N, N_RF) with
    unit-modulus entries (squared column norm N).  The codebook is a
    pure function of (config, slots, seed), so BS and UEs can generate
    it independently.
    """

    config: ArrayConfig
    slots: int
    seed: int
    bs_vectors: np.ndarray
    ue_vectors: np.ndarray

    @property
    def measurement_count(self) -> int:
        return self.slots * self.config.bs_rf_chains * self.config.ue_rf_chains


def generate_beacon_codebook(config: ArrayConfig, slots: int, seed: int) -> BeaconCodebook:
    """Draw the deterministic beacon codebook for a training phase."""
    if slots < 1:
        raise ValueError("slots must be positive")
    rng = substream(seed, SWEEP_BA, 0)
    m, mrf = config.bs_antennas, config.bs_rf_chains
    n, nrf = config.ue_antennas, config.ue_rf_chains
    bs = np.exp(2j * np.pi * rng.random((slots, m, mrf)))
    ue = np.exp(2j * np.pi * rng.random((slots, n, nrf)))
    if config.architecture is Architecture.OSPS:
        d = config.subarray_size
        mask = np.zeros((m, mrf))
        for i in range(mrf):
            mask[i * d:(i + 1) * d, i] = 1.0
        bs = bs * mask
    return BeaconCodebook(config=config, slots=slots, seed=seed, bs_vectors=bs, ue_vectors=ue)


def _bs_subarray_columns(codebook: BeaconCodebook) -> np.ndarray:
    """Beacon columns reduced to their own subarray: (slots, D, M_RF)."""
    cfg = codebook.config
    if cfg.architecture is Architecture.FC:
        return codebook.bs_vectors
    d, mrf = cfg.subarray_size, cfg.bs_rf_chains
    blocks = codebook.bs_vectors.reshape(codebook.slots, mrf, d, mrf)
    return np.einsum("tidi->tdi", blocks)


def build_sensing_matrix(codebook: BeaconCodebook, p_tot: float) -> np.ndarray:
    """Power-domain sensing matrix mapping vec(Gamma) to mean powers.

    Row (t, i, j) (slot, BS stream, UE chain; t outermost) and column
    (n, m) (row-major cell of the N x M map) hold
    (p_tot / M_RF) * |(F_ue^H v_tj)_n|^2 * |(F_bs^H u_ti)_m|^2.
    """
    if p_tot < 0:
        raise ValueError("p_tot must be non-negative")
    cfg = codebook.config
    dic = BeamDictionary.for_config(cfg)
    ue_gain = np.abs(np.einsum("kn,tnj->tkj", dic.ue.conj().T, codebook.ue_vectors)) ** 2
    bs_gain = np.abs(np.einsum("kd,tdi->tki", dic.bs.conj().T, _bs_subarray_columns(codebook))) ** 2
    rows = np.einsum("tnj,tmi->tijnm", ue_gain, bs_gain)
    scale = p_tot / cfg.bs_rf_chains
    return scale * rows.reshape(codebook.measurement_count,
                                cfg.ue_antennas * cfg.bs_antennas)


@dataclass(frozen=True)
class MeasurementSet:
    """Received beacon powers plus the model that explains them."""

    powers: np.ndarray
    sensing: np.ndarray
    noise_floor: float


def _sample_gain_block(paths, draws: int, rng: np.random.Generator) -> np.ndarray:
    """Fresh fading gains for every (draw, path), Rice per path."""
    amps = np.sqrt([p.strength for p in paths])
    etas = np.array([float(p.rice_factor) for p in paths])
    w = (rng.standard_normal((draws, len(paths)))
         + 1j * rng.standard_normal((draws, len(paths)))) / np.sqrt(2.0)
    finite = np.isfinite(etas)
    etas_f = np.where(finite, etas, 0.0)
    los = np.where(finite, np.sqrt(etas_f / (1.0 + etas_f)), 1.0)
    nlos = np.where(finite, 1.0 / np.sqrt(1.0 + etas_f), 0.0)
    return amps * (los + w * nlos)


def synthesize_measurements(paths, codebook: BeaconCodebook, p_tot: float,
                            noise_power: float, rng: np.random.Generator,
                            coherence_blocks: int = 3) -> MeasurementSet:
    """Simulate the UE's per-(slot, stream, chain) power measurements.

    Pilot streams are spread with PN sequences much shorter than the
    path delay spread, so despreading resolves each path in its own
    delay bin and the measured power is the incoherent sum of per-path
    powers (cross-path products cancel).  A beacon slot spans
    ``coherence_blocks`` fading coherence intervals and the UE averages
    the despread power over them, so each measurement estimates a
    second-order statistic: q = mean_b [(p_tot / M_RF) *
    sum_l |v^H H_l(b) u|^2 + |z_b|^2] with z_b complex Gaussian of
    variance ``noise_power`` and fading redrawn per block.  Rows are
    ordered like the sensing matrix.
    """
    if coherence_blocks < 1:
        raise ValueError("coherence_blocks must be positive")
    cfg = codebook.config
    n, m = cfg.ue_antennas, cfg.bs_antennas
    slots, blocks = codebook.slots, coherence_blocks
    a_r = np.stack([array_response(p.aoa, n) for p in paths])
    a_t = np.stack([array_response(p.aod, m) for p in paths])
    magnitudes = np.array([abs(p.phase) for p in paths])
    gains = _sample_gain_block(paths, slots * blocks, rng) * magnitudes
    mean_power = np.abs(gains.reshape(slots, blocks, -1)) ** 2
    mean_power = mean_power.mean(axis=1)
    ue_proj = np.einsum("tnj,ln->tjl", codebook.ue_vectors.conj(), a_r)
    bs_proj = np.einsum("lm,tmi->tli", a_t.conj(), codebook.bs_vectors)
    path_powers = (mean_power[:, None, None, :]
                   * np.abs(ue_proj[:, None, :, :]) ** 2
                   * np.abs(np.transpose(bs_proj, (0, 2, 1)))[:, :, None, :] ** 2)
    shape = (slots, cfg.bs_rf_chains, cfg.ue_rf_chains, blocks)
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        * np.sqrt(noise_power / 2.0)
    q = (path_powers.sum(axis=-1) * (p_tot / cfg.bs_rf_chains)
         + (np.abs(noise) ** 2).mean(axis=-1))
    return MeasurementSet(powers=q.reshape(-1),
                          sensing=build_sensing_matrix(codebook, p_tot),
                          noise_floor=noise_power)


def kkt_residual(sensing: np.ndarray, target: np.ndarray, x: np.ndarray) -> float:
    """Scaled max violation of the NNLS stationarity conditions at x."""
    w = sensing.T @ (target - sensing @ x)
    scale = max(np.max(np.abs(sensing.T @ target)), np.finfo(float).tiny)
    viol_active = np.max(w[x <= 0.0], initial=0.0)
    viol_passive = np.max(np.abs(w[x > 0.0]), initial=0.0)
    return max(viol_active, viol_passive) / scale


def nnls_active_set(sensing: np.ndarray, target: np.ndarray,
                    kkt_tol: float = 1e-8, max_iters: int = 500):
    """Solve min ||sensing @ x - target||^2 subject to x >= 0.

    Lawson-Hanson active-set iteration: grow a passive set one most
    violating coordinate at a time, solve the unconstrained least
    squares on it, and clip back onto the boundary whenever the interior
    solution leaves the feasible cone.  Terminates at the exact solution
    for numerically sane problems.

    Returns (x, iterations).  Raises ConvergenceError with the best
    iterate if ``max_iters`` least-squares solves are exceeded.
    """
    rows, cols = sensing.shape
    if target.shape != (rows,):
        raise ValueError("target length must match sensing rows")
    x = np.zeros(cols)
    passive = np.zeros(cols, dtype=bool)
    grad_scale = max(np.max(np.abs(sensing.T @ target)), np.finfo(float).tiny)
    tol = kkt_tol * grad_scale
    w = sensing.T @ target
    iters = 0
    while True:
        w_free = np.where(passive, -np.inf, w)
        j = int(np.argmax(w_free))
        if w_free[j] <= tol:
            break
        passive[j] = True
        while True:
            iters += 1
            if iters > max_iters:
                viol = kkt_residual(sensing, target, x)
                raise ConvergenceError(
                    f"NNLS did not converge within {max_iters} iterations "
                    f"(KKT violation {viol:.3e})",
                    iterate=x, kkt_violation=viol)
            idx = np.flatnonzero(passive)
            z = np.linalg.lstsq(sensing[:, idx], target, rcond=None)[0]
            if np.all(z > 0.0):
                x[:] = 0.0
                x[idx] = z
                break
            xp = x[idx]
            blocking = z <= 0.0
            denom = xp - z
            steps = np.where(blocking & (denom > 0.0), xp / np.where(denom > 0.0, denom, 1.0), np.inf)
            steps[blocking & (denom <= 0.0)] = 0.0
            alpha = float(np.min(steps))
            xp = xp + alpha * (z - xp)
            xp[steps <= alpha] = 0.0
            x[:] = 0.0
            x[idx] = np.maximum(xp, 0.0)
            passive[idx] = x[idx] > 0.0
        w = sensing.T @ (target - sensing @ x)
    return x, iters


@dataclass(frozen=True)
class BeamspaceStats:
    """Recovered angular power map with solver diagnostics."""

    gamma: np.ndarray
    iterations: int
    kkt: float
    objective: float


def estimate_beamspace_stats(measurements: MeasurementSet, config: ArrayConfig,
                             kkt_tol: float = 1e-8, max_iters: int = 500) -> BeamspaceStats:
    """Fit the angular power map to one training phase's measurements."""
    target = measurements.powers - measurements.noise_floor
    x, iters = nnls_active_set(measurements.sensing, target, kkt_tol, max_iters)
    gamma = x.reshape(config.ue_antennas, config.bs_antennas)
    resid = measurements.sensing @ x - target
    return BeamspaceStats(gamma=gamma, iterations=iters,
                          kkt=kkt_residual(measurements.sensing, target, x),
                          objective=float(resid @ resid))


def detect_strongest(stats: BeamspaceStats | np.ndarray):
    """(aoa_index, aod_index), 1-based, of the largest map cell.

    Ties resolve to the smallest AoA index, then the smallest AoD index.
    Returns None when the map is identically zero (nothing detected).
    """
    gamma = stats.gamma if isinstance(stats, BeamspaceStats) else stats
    if not np.any(gamma > 0.0):
        return None
    n, m = np.unravel_index(int(np.argmax(gamma)), gamma.shape)
    return n + 1, m + 1


def detection_probability(scenario: Scenario, slots: int, p_tot: float,
                          trials: int, seed: int):
    """Fraction of trials where training finds the strongest path's cell.

    Each trial draws a fresh user, a fresh beacon codebook, and fresh
    fading and noise, then checks that the NNLS map peaks exactly at the
    strongest path's (AoA, AoD) grid cell.  Returns (p_d, std_err).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    cfg = scenario.config
    noise = scenario.noise_power
    hits = 0
    for trial in range(trials):
        rng = substream(seed, SWEEP_BA, slots, trial)
        paths = draw_user_paths(scenario, rng)
        codebook = generate_beacon_codebook(cfg, slots, int(rng.integers(2 ** 63)))
        meas = synthesize_measurements(paths, codebook, p_tot, noise, rng,
                                       coherence_blocks=scenario.beacon_coherence_blocks)
        stats = estimate_beamspace_stats(meas, cfg)
        lead = strongest_path(paths)
        if detect_strongest(stats) == (lead.aoa_index, lead.aod_index):
            hits += 1
    p_d = hits / trials
    return p_d, float(np.sqrt(p_d * (1.0 - p_d) / trials))
