"""Monte Carlo sweeps: detection probability and sum spectral efficiency.

The two sweep families mirror the two phases of the link.  ``ba_sweep``
scores the training phase by how often the estimated angular power map
peaks at the strongest path's beam pair, as a function of the number of
beacon slots.  ``se_sweep`` scores the data phase by the ergodic sum
rate of K simultaneously scheduled users under a chosen precoding
scheme, as a function of the single-antenna SNR before beamforming.

All randomness is drawn from counter-derived substreams keyed by
(seed, sweep id, point index, trial index), so any point can be
recomputed independently and in parallel, and different schemes and
architectures see identical channel realizations at the same trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beamalign import detection_probability
from .channel import (Scenario, beamspace_power_profile, channel_matrix,
                      draw_scheduled_users, sample_path_gains, strongest_path)
from .precode import (IllConditionedError, bst_precoder, bzf_precoder,
                      top_p_beam_set)
from .rng import SWEEP_SE, substream

MAX_TRIAL_REDRAWS = 100


@dataclass(frozen=True)
class LinkBudget:
    """Radiated power split evenly over the BS data streams."""

    p_tot: float
    noise_power: float
    streams: int

    def __post_init__(self):
        if self.p_tot < 0.0:
            raise ValueError("p_tot must be >= 0")
        if self.noise_power <= 0.0:
            raise ValueError("noise_power must be > 0")
        if self.streams < 1:
            raise ValueError("streams must be >= 1")

    @property
    def stream_power(self) -> float:
        return self.p_tot / self.streams


def p_tot_for_snr(snr_bbf_db: float, path_strengths, noise_power: float) -> float:
    """Total radiated power that yields the requested single-antenna SNR.

    The SNR-before-beamforming axis is defined through the average
    channel energy: snr = p_tot * sum(strengths) / noise_power.
    """
    total = float(np.sum(path_strengths))
    if total <= 0.0:
        raise ValueError("path strengths must sum to a positive value")
    return 10.0 ** (snr_bbf_db / 10.0) * noise_power / total


def snr_bbf_db(p_tot: float, path_strengths, noise_power: float) -> float:
    """Inverse of :func:`p_tot_for_snr`."""
    total = float(np.sum(path_strengths))
    if total <= 0.0:
        raise ValueError("path strengths must sum to a positive value")
    if p_tot <= 0.0:
        raise ValueError("p_tot must be > 0 to express in dB")
    return 10.0 * math.log10(p_tot * total / noise_power)


@dataclass(frozen=True)
class PrecodingScheme:
    """Data-phase scheme selector: beam steering or zero forcing with
    p beams fed back per user."""

    kind: str
    p: int = 1

    def __post_init__(self):
        if self.kind not in ("bst", "bzf"):
            raise ValueError(f"kind must be 'bst' or 'bzf', got {self.kind!r}")
        if self.kind == "bst" and self.p != 1:
            raise ValueError("beam steering always uses p=1")
        if self.p < 1:
            raise ValueError("p must be >= 1")

    @property
    def label(self) -> str:
        return "bst" if self.kind == "bst" else f"bzf_p{self.p}"

    @classmethod
    def from_label(cls, label: str) -> "PrecodingScheme":
        text = label.strip().lower()
        if text == "bst":
            return cls("bst", 1)
        if text == "bzf":
            return cls("bzf", 1)
        if text.startswith("bzf_p"):
            try:
                return cls("bzf", int(text[len("bzf_p"):]))
            except ValueError:
                pass
        raise ValueError(f"unknown scheme label {label!r}")


@dataclass(frozen=True)
class SweepPoint:
    """One (architecture, scheme, axis) cell of a sweep table."""

    architecture: str
    scheme: str
    axis: float
    value: float
    std_err: float
    trials: int
    seed: int


@dataclass(frozen=True)
class SweepResult:
    axis_name: str
    metric_name: str
    points: tuple

    def values(self, architecture: str, scheme: str | None = None):
        """(axis, value, std_err) arrays for one labeled series."""
        rows = [p for p in self.points
                if p.architecture == architecture
                and (scheme is None or p.scheme == scheme)]
        rows.sort(key=lambda p: p.axis)
        return (np.array([p.axis for p in rows]),
                np.array([p.value for p in rows]),
                np.array([p.std_err for p in rows]))


def sinr_per_ue(channels: np.ndarray, precoders, budget: LinkBudget) -> np.ndarray:
    """Post-combining SINR of each scheduled user.

    ``channels`` stacks the K users' antenna-domain channels (K, N, M).
    Interference is what UE k receives from the other users' precoding
    columns through its own channel; the noise term is the average noise
    power over the signalling bandwidth.
    """
    amps = np.einsum("kn,knm,mj->kj", precoders.combiners.conj(), channels,
                     precoders.precoder)
    powers = np.abs(amps) ** 2 * budget.stream_power
    signal = np.diag(powers)
    interference = powers.sum(axis=1) - signal
    return signal / (interference + budget.noise_power)


def sum_rate(channels: np.ndarray, precoders, budget: LinkBudget) -> float:
    """Sum over users of log2(1 + SINR)."""
    return float(np.sum(np.log2(1.0 + sinr_per_ue(channels, precoders, budget))))


def genie_selections(users, scenario: Scenario, p: int):
    """Feedback an ideal training phase would produce for each user.

    The receive beam is the strongest path's arrival cell; the p
    transmit beams are the strongest entries of the user's expected
    angular power map along that receive beam.
    """
    selections = []
    for paths in users:
        lead = strongest_path(paths)
        profile = beamspace_power_profile(paths, scenario.config)
        selections.append(top_p_beam_set(profile, lead.aoa_index, p))
    return selections


def _draw_data_trial(scenario: Scenario, rng: np.random.Generator):
    """One block-fading realization of K scheduled users."""
    users = draw_scheduled_users(scenario, rng)
    channels = np.stack([
        channel_matrix(paths, sample_path_gains(paths, rng), scenario.config)
        for paths in users])
    return users, channels


def pilot_noise_for(budget: LinkBudget) -> float:
    """Effective-channel estimation error variance of the uplink pilots.

    Zero forcing needs the effective channel, learned from one orthogonal
    pilot sub-slot per beam port at the data-phase stream power, so each
    estimated entry carries complex Gaussian error of variance
    noise_power / stream_power.  Beam steering never estimates anything
    and is unaffected.  At high SNR the error vanishes and zero forcing
    behaves as if the channel were known exactly; at low SNR the error
    dominates the tiny effective coefficients and drags zero forcing
    below plain beam steering.
    """
    if budget.stream_power <= 0.0:
        return 0.0
    return budget.noise_power / budget.stream_power


def trial_sum_rate(scenario: Scenario, scheme: PrecodingScheme,
                   budget: LinkBudget, rng: np.random.Generator,
                   pilot_noise_variance: float | None = None) -> float:
    """Draw one scheduled user group and score the scheme on it.

    ``pilot_noise_variance`` of None applies :func:`pilot_noise_for`;
    pass 0.0 for a genie-aided effective channel.  Degenerate draws
    (users rounding to the same transmit beam, or an effective channel
    too ill-conditioned to invert) are redrawn from the same stream,
    like a scheduler skipping an infeasible grouping.
    """
    if pilot_noise_variance is None:
        pilot_noise_variance = pilot_noise_for(budget)
    for _ in range(MAX_TRIAL_REDRAWS):
        users, channels = _draw_data_trial(scenario, rng)
        try:
            selections = genie_selections(users, scenario, scheme.p)
            if scheme.kind == "bst":
                precoders = bst_precoder(selections, scenario.config)
            else:
                precoders, _ = bzf_precoder(
                    selections, channels, scenario.config,
                    estimation_noise_variance=pilot_noise_variance, rng=rng)
        except (IllConditionedError, ValueError):
            continue
        return sum_rate(channels, precoders, budget)
    raise RuntimeError(
        f"no feasible user group after {MAX_TRIAL_REDRAWS} redraws")


def se_point(scenario: Scenario, scheme: PrecodingScheme, point_index: int,
             snr_db: float, trials: int, seed: int,
             pilot_noise_variance: float | None = None) -> SweepPoint:
    """Mean sum rate at one SNR grid point."""
    if trials < 1:
        raise ValueError("trials must be positive")
    budget = LinkBudget(
        p_tot=p_tot_for_snr(snr_db, [g for g, _ in scenario.profile],
                            scenario.noise_power),
        noise_power=scenario.noise_power,
        streams=scenario.config.bs_rf_chains)
    samples = np.empty(trials)
    for trial in range(trials):
        rng = substream(seed, SWEEP_SE, point_index, trial)
        samples[trial] = trial_sum_rate(scenario, scheme, budget, rng,
                                        pilot_noise_variance)
    value = float(samples.mean())
    std_err = float(samples.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SweepPoint(architecture=scenario.config.architecture.value,
                      scheme=scheme.label, axis=float(snr_db), value=value,
                      std_err=std_err, trials=trials, seed=seed)


def sum_spectral_efficiency(scenario: Scenario, scheme: PrecodingScheme,
                            snr_grid_db, trials: int, seed: int,
                            pilot_noise_variance: float | None = None) -> SweepResult:
    """Sum-rate sweep of one scheme over the SNR grid."""
    points = [se_point(scenario, scheme, i, snr, trials, seed,
                       pilot_noise_variance)
              for i, snr in enumerate(snr_grid_db)]
    return SweepResult(axis_name="snr_bbf_db", metric_name="r_sum",
                       points=tuple(points))


def se_sweep(scenario: Scenario, schemes, snr_grid_db, trials: int,
             seed: int, architectures=("fc", "osps"),
             pilot_noise_variance: float | None = None) -> SweepResult:
    """Cross product of architectures and schemes on a shared SNR grid.

    Identical substreams across the combinations mean every cell of the
    cross product sees the same user draws and fading, which makes the
    scheme and architecture comparisons paired rather than independent.
    """
    points = []
    for arch in architectures:
        arch_scenario = scenario.with_architecture(arch)
        for scheme in schemes:
            result = sum_spectral_efficiency(arch_scenario, scheme,
                                             snr_grid_db, trials, seed,
                                             pilot_noise_variance)
            points.extend(result.points)
    return SweepResult(axis_name="snr_bbf_db", metric_name="r_sum",
                       points=tuple(points))


def ba_point(scenario: Scenario, slots: int, snr_bbf_db_value: float,
             trials: int, seed: int) -> SweepPoint:
    """Detection probability of one architecture at one training length."""
    p_tot = p_tot_for_snr(snr_bbf_db_value,
                          [g for g, _ in scenario.profile],
                          scenario.noise_power)
    p_d, std_err = detection_probability(scenario, slots, p_tot, trials, seed)
    return SweepPoint(architecture=scenario.config.architecture.value,
                      scheme="nnls", axis=float(slots), value=p_d,
                      std_err=std_err, trials=trials, seed=seed)


def ba_sweep(scenario: Scenario, t_grid, snr_bbf_db_value: float,
             trials: int, seed: int,
             architectures=("fc", "osps")) -> SweepResult:
    """Detection-probability sweep over training lengths, both
    architectures on common random numbers."""
    points = []
    for arch in architectures:
        arch_scenario = scenario.with_architecture(arch)
        for slots in t_grid:
            points.append(ba_point(arch_scenario, int(slots),
                                   snr_bbf_db_value, trials, seed))
    return SweepResult(axis_name="slots", metric_name="p_d",
                       points=tuple(points))


def training_length_for(result: SweepResult, architecture: str,
                        threshold: float = 0.95):
    """Smallest swept training length whose detection probability
    reaches the threshold, or None if the sweep never gets there."""
    axis, values, _ = result.values(architecture, "nnls")
    above = np.flatnonzero(values >= threshold)
    return int(axis[above[0]]) if above.size else None
