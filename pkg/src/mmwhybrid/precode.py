"""Downlink precoders built from training output.

After training, UE k knows its strongest receive beam n_k and reports
the indices of its p strongest transmit beams back to the BS.  Two
precoders use that feedback:

* beam steering (BST): point one dictionary beam at each UE's strongest
  transmit direction, identity baseband.  Cheap, but inter-user
  interference survives.
* baseband zero forcing (BZF): keep the p K dictionary beams as the
  analog support and invert the low-dimensional effective channel seen
  through them, so inter-user interference cancels at the price of a
  short uplink pilot round.

All precoding matrices here are stored at antenna level (M rows).  For
the subarray architecture each dictionary beam occupies only its own
user's subarray rows; the zero-forcing baseband may still mix beams of
different users into one stream, which is exactly what the digital
stage is for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import Architecture, ArrayConfig, BeamDictionary, dft_dictionary
from .beamalign import BeamspaceStats

CONDITION_LIMIT = 1e12
UNIT_NORM_TOL = 1e-9


class IllConditionedError(RuntimeError):
    """Effective channel too close to singular for zero forcing."""

    def __init__(self, message: str, condition_number: float):
        super().__init__(message)
        self.condition_number = condition_number


@dataclass(frozen=True)
class BeamSelection:
    """One UE's feedback: receive beam plus ordered transmit beams.

    ``transmit_indices`` are 1-based dictionary columns sorted by
    non-increasing estimated strength.  ``padded`` marks selections where
    fewer than p map cells were strictly positive and the tail had to be
    filled with unused low-index beams.
    """

    receive_index: int
    transmit_indices: tuple
    padded: bool = False

    def __post_init__(self):
        if self.receive_index < 1:
            raise ValueError("receive_index is 1-based and must be >= 1")
        if len(self.transmit_indices) == 0:
            raise ValueError("transmit_indices must not be empty")
        if len(set(self.transmit_indices)) != len(self.transmit_indices):
            raise ValueError("transmit_indices must be distinct")

    @property
    def p(self) -> int:
        return len(self.transmit_indices)


@dataclass(frozen=True)
class EffectiveChannel:
    """K x (p K) channel seen between streams and beam ports.

    ``pilot_subslots`` records the uplink estimation cost (p K sub-slot
    pilots).  ``estimation_noise_variance`` of 0 means perfect knowledge.
    """

    matrix: np.ndarray
    estimation_noise_variance: float = 0.0
    pilot_subslots: int = 0


@dataclass(frozen=True)
class PrecoderSet:
    """Everything the data phase needs for one scheduled user group."""

    scheme: str
    analog_support: np.ndarray
    baseband: np.ndarray
    precoder: np.ndarray
    combiners: np.ndarray

    @property
    def num_users(self) -> int:
        return self.precoder.shape[1]


def ue_combiner(receive_index: int, ue_antennas: int) -> np.ndarray:
    """Unit-norm receive beam: dictionary column at the detected angle."""
    if not 1 <= receive_index <= ue_antennas:
        raise ValueError(
            f"receive_index {receive_index} outside [1, {ue_antennas}]")
    return dft_dictionary(ue_antennas, ue_antennas)[:, receive_index - 1]


def top_p_beam_set(stats, receive_index: int, p: int) -> BeamSelection:
    """Pick the p strongest transmit beams along one receive direction.

    ``stats`` is a BeamspaceStats or a raw non-negative (N, M) map; the
    relevant row is the one matching ``receive_index``.  Ties break to
    the smaller beam index.  If fewer than p entries are strictly
    positive the remaining slots are filled with the smallest-index
    unused beams and the selection is flagged ``padded``.
    """
    gamma = stats.gamma if isinstance(stats, BeamspaceStats) else np.asarray(stats)
    n_rows, m = gamma.shape
    if not 1 <= receive_index <= n_rows:
        raise ValueError(f"receive_index {receive_index} outside [1, {n_rows}]")
    if not 1 <= p <= m:
        raise ValueError(f"p must be in [1, {m}], got {p}")
    row = gamma[receive_index - 1]
    if np.any(row < 0.0):
        raise ValueError("strength map must be non-negative")
    # stable sort on descending value keeps equal entries in index order
    order = np.argsort(-row, kind="stable")
    positive = int(np.count_nonzero(row > 0.0))
    return BeamSelection(receive_index=receive_index,
                         transmit_indices=tuple(int(i) + 1 for i in order[:p]),
                         padded=p > positive)


def _combiner_stack(selections, config: ArrayConfig) -> np.ndarray:
    return np.stack([ue_combiner(s.receive_index, config.ue_antennas)
                     for s in selections])


def analog_beam_support(selections, config: ArrayConfig) -> np.ndarray:
    """Antenna-level analog beam matrix, one unit-norm column per
    (user, selected beam), user-major order.

    FC columns are dictionary columns over the full aperture.  Subarray
    columns hold user k's dictionary beam on subarray k only, rescaled
    to unit norm, so the matrix keeps the block structure the hardware
    imposes.
    """
    cfg = config
    k_users = len(selections)
    if cfg.architecture is Architecture.OSPS and k_users != cfg.bs_rf_chains:
        raise ValueError(
            f"subarray precoding serves exactly {cfg.bs_rf_chains} users, "
            f"got {k_users}")
    dic = BeamDictionary.for_config(cfg).bs
    d = cfg.subarray_size
    columns = []
    for k, sel in enumerate(selections):
        for beam in sel.transmit_indices:
            if not 1 <= beam <= cfg.bs_antennas:
                raise ValueError(f"beam index {beam} outside [1, {cfg.bs_antennas}]")
            col = np.zeros(cfg.bs_antennas, dtype=complex)
            beam_col = dic[:, beam - 1]
            beam_col = beam_col / np.linalg.norm(beam_col)
            if cfg.architecture is Architecture.OSPS:
                col[k * d:(k + 1) * d] = beam_col
            else:
                col[:] = beam_col
            columns.append(col)
    return np.stack(columns, axis=1)


def bst_precoder(selections, config: ArrayConfig) -> PrecoderSet:
    """Steer one beam per user, identity baseband."""
    if any(s.p != 1 for s in selections):
        raise ValueError("beam steering uses exactly one beam per user")
    beams = [s.transmit_indices[0] for s in selections]
    if len(set(beams)) != len(beams):
        raise ValueError(
            f"scheduling violation: users share transmit beams {sorted(beams)}")
    support = analog_beam_support(selections, config)
    baseband = np.eye(len(selections), dtype=complex)
    return compose_precoder(support, baseband, "bst",
                            _combiner_stack(selections, config))


def effective_channel(combiners: np.ndarray, channels: np.ndarray,
                      analog_support: np.ndarray,
                      estimation_noise_variance: float = 0.0,
                      rng: np.random.Generator | None = None) -> EffectiveChannel:
    """Channel between data streams and beam ports: row k is
    v_k^H H_k [beam columns].

    With zero ``estimation_noise_variance`` this is the exact effective
    channel; otherwise i.i.d. complex Gaussian estimation error of that
    variance is added per entry, standing in for an uplink pilot round
    of one sub-slot per beam port.
    """
    matrix = np.einsum("kn,knm,mc->kc", combiners.conj(), channels,
                       analog_support)
    if estimation_noise_variance < 0.0:
        raise ValueError("estimation_noise_variance must be >= 0")
    if estimation_noise_variance > 0.0:
        if rng is None:
            raise ValueError("estimation noise needs an rng")
        matrix = matrix + (rng.standard_normal(matrix.shape)
                           + 1j * rng.standard_normal(matrix.shape)) \
            * np.sqrt(estimation_noise_variance / 2.0)
    return EffectiveChannel(matrix=matrix,
                            estimation_noise_variance=estimation_noise_variance,
                            pilot_subslots=matrix.shape[1])


def bzf_baseband(effective: EffectiveChannel, analog_support: np.ndarray):
    """Zero-forcing baseband: right pseudo-inverse of the effective
    channel, columns scaled so each composed antenna-level column has
    unit norm.

    Returns (baseband, delta) where delta holds the positive per-stream
    scale factors; the zero-forced effective channel equals diag(delta).
    """
    h = effective.matrix
    gram = h @ h.conj().T
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
        raise IllConditionedError(
            f"effective channel gram condition number {cond:.3e} "
            f"exceeds {CONDITION_LIMIT:.0e}", condition_number=cond)
    raw = h.conj().T @ np.linalg.inv(gram)
    composed = analog_support @ raw
    norms = np.linalg.norm(composed, axis=0)
    if np.any(norms <= 0.0):
        raise IllConditionedError(
            "zero-forcing produced a zero precoding column",
            condition_number=cond)
    delta = 1.0 / norms
    return raw * delta, delta


def compose_precoder(analog_support: np.ndarray, baseband: np.ndarray,
                     scheme: str, combiners: np.ndarray) -> PrecoderSet:
    """Multiply analog and baseband stages into per-user columns.

    Beam-steering columns are rescaled to unit norm (a no-op for unit
    dictionary columns); zero-forcing columns must already be unit norm
    by construction, deviations beyond tolerance raise.
    """
    precoder = analog_support @ baseband
    norms = np.linalg.norm(precoder, axis=0)
    if scheme == "bst":
        if np.any(norms <= 0.0):
            raise ValueError("beam steering produced a zero column")
        precoder = precoder / norms
    elif scheme == "bzf":
        if np.max(np.abs(norms - 1.0)) > UNIT_NORM_TOL:
            raise ValueError(
                f"zero-forcing columns deviate from unit norm by "
                f"{np.max(np.abs(norms - 1.0)):.3e}")
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return PrecoderSet(scheme=scheme, analog_support=analog_support,
                       baseband=baseband, precoder=precoder,
                       combiners=combiners)


def bzf_precoder(selections, channels: np.ndarray, config: ArrayConfig,
                 estimation_noise_variance: float = 0.0,
                 rng: np.random.Generator | None = None):
    """Full zero-forcing construction from feedback plus channels.

    Returns (PrecoderSet, EffectiveChannel).  Raises IllConditionedError
    when the effective channel cannot be inverted reliably; callers
    typically redraw the trial.
    """
    support = analog_beam_support(selections, config)
    combiners = _combiner_stack(selections, config)
    eff = effective_channel(combiners, channels, support,
                            estimation_noise_variance, rng)
    baseband, _ = bzf_baseband(eff, support)
    return compose_precoder(support, baseband, "bzf", combiners), eff
