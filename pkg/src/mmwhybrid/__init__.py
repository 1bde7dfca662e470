"""Link-level simulator for mmWave multiuser hybrid beamforming.

Compares fully-connected and one-stream-per-subarray transmit
architectures on three axes: beam-alignment training efficiency,
multiuser sum spectral efficiency under beam-steering and baseband
zero-forcing precoding, and power-amplifier energy efficiency under
waveform-dependent back-off.
"""

from .arrays import Architecture, ArrayConfig, BeamDictionary, array_response, dft_dictionary
from .beamalign import (BeaconCodebook, ConvergenceError, detect_strongest,
                        detection_probability, estimate_beamspace_stats,
                        generate_beacon_codebook, nnls_active_set, synthesize_measurements)
from .channel import (MultipathComponent, Scenario, channel_matrix, draw_scheduled_users,
                      draw_user_paths, sample_path_gain, strongest_path)
from .config import ConfigError, ScenarioConfig, parse_config
from .evaluate import (LinkBudget, PrecodingScheme, SweepPoint, SweepResult, ba_sweep,
                       p_tot_for_snr, se_sweep, sinr_per_ue, sum_rate, training_length_for)
from .power import (BackoffProfile, PAModel, SaturationError, backoff_for,
                    beamformed_sum_power, divider_combiner_factors, option1_evaluate,
                    option2_evaluate, pa_consumed, pa_efficiency, power_sweep_table)
from .precode import (BeamSelection, IllConditionedError, PrecoderSet, bst_precoder,
                      bzf_precoder, effective_channel, top_p_beam_set, ue_combiner)

__version__ = "0.1.0"

__all__ = [
    "Architecture", "ArrayConfig", "BeamDictionary", "array_response", "dft_dictionary",
    "BeaconCodebook", "ConvergenceError", "detect_strongest", "detection_probability",
    "estimate_beamspace_stats", "generate_beacon_codebook", "nnls_active_set",
    "synthesize_measurements",
    "MultipathComponent", "Scenario", "channel_matrix", "draw_scheduled_users",
    "draw_user_paths", "sample_path_gain", "strongest_path",
    "ConfigError", "ScenarioConfig", "parse_config",
    "LinkBudget", "PrecodingScheme", "SweepPoint", "SweepResult", "ba_sweep",
    "p_tot_for_snr", "se_sweep", "sinr_per_ue", "sum_rate", "training_length_for",
    "BackoffProfile", "PAModel", "SaturationError", "backoff_for",
    "beamformed_sum_power", "divider_combiner_factors", "option1_evaluate",
    "option2_evaluate", "pa_consumed", "pa_efficiency", "power_sweep_table",
    "BeamSelection", "IllConditionedError", "PrecoderSet", "bst_precoder",
    "bzf_precoder", "effective_channel", "top_p_beam_set", "ue_combiner",
    "__version__",
]
