"""STAR-RIS assisted SWIPT downlink simulator with AoI-aware scheduling."""

__version__ = "0.1.0"

from .channel import (ChannelSet, Geometry, Pair, SIDES, cascade,
                      default_geometry, harvested_energy, path_loss,
                      sample_channel_set, snr)
from .aoi import (AoITrace, StreamState, average_sum_aoi, delivery_predicate,
                  reduction_weight, sample_arrival, step)
from .star_ris import (CONVENTIONAL, ES, MODES, MS, TarcProfile, binarity_gap,
                       conventional_pattern, extract_rank_one,
                       from_lift_vectors, lift, make_conventional,
                       make_profile, round_binary, tarc_diagonal, to_vector,
                       uniform_split_profile)
from .conic import (ConicProblem, ConicSolution, DiagConstraint, LinConstraint,
                    LinExpr, PSDConstraint, SOCConstraint, VarBlock,
                    linexpr_value, solve_conic, validate_problem)
from .optimizer import (BeamformingResult, SlotDecision, SlotProblem,
                        TarcSchedulingResult, alternating_optimize,
                        build_lifted_forms, matched_init_beams, repair_beams,
                        round_schedule, solve_beamforming_sca,
                        solve_tarc_scheduling_es, solve_tarc_scheduling_ms,
                        verify_decision)
from .sim import (RANDOM_PHASE, SWEEP_PARAMETERS, EpisodeMetrics, EpisodeTrace,
                  SimConfig, SweepRow, apply_sweep_value, compute_metrics,
                  episode_seed_sequence, run_episode, run_sweep, summarize)

__all__ = [name for name in dir() if not name.startswith("_")]
