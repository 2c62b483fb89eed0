"""Episode simulation and Monte Carlo sweeps.

An episode walks N slots: draw arrivals, draw a channel realization,
solve the per-slot problem (or apply the random-phase baseline), then
realize delivery outcomes and advance the age states. Episodes are
seeded through a splittable rule on (seed, run index) that is shared by
every mode, so paired comparisons consume identical channel and arrival
randomness.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import aoi, optimizer, star_ris
from .channel import Geometry, Pair, SIDES, default_geometry, sample_channel_set

RANDOM_PHASE = "random_phase"
MODES = star_ris.MODES + (RANDOM_PHASE,)

SWEEP_PARAMETERS = ("gamma_th", "power_budget", "n_t", "m", "energy_min_db")


@dataclass(frozen=True)
class SimConfig:
    """Episode parameters; thresholds are stored on linear scale."""

    geometry: Geometry = field(default_factory=default_geometry)
    m: int = 32
    n_t: int = 4
    horizon: int = 100
    lambda_t: float = 0.6
    lambda_r: float = 0.6
    gamma_th: float = 10.0 ** 0.3
    power_budget: float = 3.0
    energy_min: float = 1e-2
    sigma2_info: float = 1.0
    sigma2_energy: float = 1.0
    mode: str = star_ris.ES
    seed: int = 0
    monte_carlo_runs: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.n_t < 1:
            raise ValueError("n_t must be at least 1")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.monte_carlo_runs < 1:
            raise ValueError("monte_carlo_runs must be at least 1")
        for lam in (self.lambda_t, self.lambda_r):
            if not 0.0 <= lam <= 1.0:
                raise ValueError("arrival rates must lie in [0, 1]")
        if self.gamma_th <= 0:
            raise ValueError("gamma_th must be positive")
        if self.power_budget <= 0:
            raise ValueError("power_budget must be positive")
        if self.energy_min < 0:
            raise ValueError("energy_min must be nonnegative")
        if self.sigma2_info <= 0 or self.sigma2_energy <= 0:
            raise ValueError("noise variances must be positive")
        if self.mode not in MODES:
            raise ValueError("unknown mode %r" % (self.mode,))


@dataclass
class EpisodeTrace:
    """Raw per-slot history an episode produces."""

    aoi: aoi.AoITrace
    status: list = field(default_factory=list)
    snr: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    ao_iterations: list = field(default_factory=list)
    objective: list = field(default_factory=list)


@dataclass
class EpisodeMetrics:
    avg_sum_aoi: float
    min_harvested_energy: float
    delivery_rate: Pair
    infeasible_slot_fraction: float
    mean_ao_iterations: float


def episode_seed_sequence(seed, run):
    """Splittable per-episode entropy shared by all modes for pairing."""
    return np.random.SeedSequence([int(seed), int(run)])


def compute_metrics(trace):
    """Reduce a raw episode trace to its figures of merit."""
    n = trace.aoi.horizon()
    if n == 0 or len(trace.status) != n:
        raise ValueError("trace is empty or inconsistent")
    optimal_energy = [min(pair) for pair, status in zip(trace.energy, trace.status)
                      if status == optimizer.STATUS_OPTIMAL]
    min_energy = min(optimal_energy) if optimal_energy else float("nan")
    rates = {side: sum(getattr(trace.aoi, "delivered")[side]) / n for side in SIDES}
    infeasible = sum(1 for status in trace.status
                     if status == optimizer.STATUS_INFEASIBLE) / n
    return EpisodeMetrics(aoi.average_sum_aoi(trace.aoi), min_energy,
                          Pair(**rates), infeasible,
                          float(np.mean(trace.ao_iterations)))


def _random_phase_decision(slot, rng):
    """Baseline: split amplitudes evenly, draw phases uniformly, then
    greedily schedule whatever the matched min-power beams can support."""
    m = slot.channels.m
    profile = star_ris.make_profile(star_ris.ES, np.full(m, 0.5),
                                    rng.uniform(0.0, 2.0 * np.pi, size=m),
                                    rng.uniform(0.0, 2.0 * np.pi, size=m))
    schedule = optimizer.round_schedule(
        Pair(1.0, 1.0), slot.weights,
        lambda cand: optimizer.repair_beams(slot, profile, cand) is not None)
    repaired = optimizer.repair_beams(slot, profile, schedule)
    if repaired is None:
        decision = optimizer._empty_decision(slot, optimizer.STATUS_INFEASIBLE, 0, [],
                                             tarc=profile)
        decision.ao_iterations = 0
        return decision
    info_beams, energy_beams = repaired
    snr_vals, energy_vals = optimizer.realized_links(slot, profile, info_beams,
                                                     energy_beams)
    ok = optimizer.verify_decision(slot, schedule, info_beams, energy_beams,
                                   snr_vals, energy_vals)
    status = optimizer.STATUS_OPTIMAL if ok else optimizer.STATUS_INFEASIBLE
    objective = sum(getattr(slot.weights, side) for side in SIDES
                    if getattr(schedule, side))
    return optimizer.SlotDecision(schedule, info_beams, energy_beams, profile,
                                  status, objective, 0, [], snr_vals, energy_vals)


def run_episode(config, seed_sequence):
    """Simulate one N-slot episode; returns (EpisodeTrace, EpisodeMetrics)."""
    channel_ss, arrival_ss, opt_ss, baseline_ss = seed_sequence.spawn(4)
    rng_channel = np.random.default_rng(channel_ss)
    rng_arrival = np.random.default_rng(arrival_ss)
    rng_opt = np.random.default_rng(opt_ss)
    rng_baseline = np.random.default_rng(baseline_ss)

    lam = Pair(config.lambda_t, config.lambda_r)
    states = {side: aoi.StreamState(1, 0, aoi.sample_arrival(getattr(lam, side),
                                                             rng_arrival),
                                    getattr(lam, side))
              for side in SIDES}
    slot_mode = config.mode if config.mode != RANDOM_PHASE else star_ris.ES
    trace = EpisodeTrace(aoi.AoITrace.empty())

    for _ in range(config.horizon):
        channels = sample_channel_set(config.geometry, config.m, config.n_t,
                                      rng_channel, config.sigma2_info,
                                      config.sigma2_energy)
        weights = Pair(**{side: aoi.reduction_weight(states[side]) for side in SIDES})
        availability = Pair(**{side: states[side].b for side in SIDES})
        slot = optimizer.SlotProblem(channels, weights, availability,
                                     config.gamma_th, config.energy_min,
                                     config.power_budget, slot_mode)
        if config.mode == RANDOM_PHASE:
            decision = _random_phase_decision(slot, rng_baseline)
        else:
            decision = optimizer.alternating_optimize(slot, rng=rng_opt)

        arrivals = {side: aoi.sample_arrival(getattr(lam, side), rng_arrival)
                    for side in SIDES}
        for side in SIDES:
            scheduled = getattr(decision.schedule, side)
            delivered = aoi.delivery_predicate(getattr(decision.realized_snr, side),
                                               scheduled, states[side].b,
                                               config.gamma_th)
            trace.aoi.append(side, states[side], scheduled, delivered)
            states[side] = aoi.step(states[side], scheduled, delivered,
                                    arrivals[side])
        trace.status.append(decision.status)
        trace.snr.append(decision.realized_snr)
        trace.energy.append(decision.realized_energy)
        trace.ao_iterations.append(decision.ao_iterations)
        trace.objective.append(decision.objective)

    return trace, compute_metrics(trace)


@dataclass
class SweepRow:
    mode: str
    parameter: str
    value: float
    run_id: int
    metrics: EpisodeMetrics


def apply_sweep_value(config, parameter, value):
    """Return a copy of config with one swept field replaced.

    gamma_th and power_budget values are linear; energy_min_db is in dB
    and converted here; n_t and m are element counts.
    """
    if parameter == "gamma_th":
        return replace(config, gamma_th=float(value))
    if parameter == "power_budget":
        return replace(config, power_budget=float(value))
    if parameter == "n_t":
        return replace(config, n_t=int(value))
    if parameter == "m":
        return replace(config, m=int(value))
    if parameter == "energy_min_db":
        return replace(config, energy_min=10.0 ** (float(value) / 10.0))
    raise ValueError("unknown sweep parameter %r, expected one of %s"
                     % (parameter, ", ".join(SWEEP_PARAMETERS)))


def _episode_job(args):
    config, seed, run = args
    _, metrics = run_episode(config, episode_seed_sequence(seed, run))
    return metrics


def run_sweep(base, parameter, values, modes, workers=1, progress=None):
    """Monte Carlo sweep over one parameter for several modes.

    Every (value, run) pair reuses the same episode seed across modes.
    Returns SweepRow records in deterministic (mode, value, run) order.
    """
    if not values or not modes:
        raise ValueError("values and modes must be non-empty")
    for mode in modes:
        if mode not in MODES:
            raise ValueError("unknown mode %r" % (mode,))
    jobs = []
    for mode in modes:
        for value in values:
            config = apply_sweep_value(replace(base, mode=mode), parameter, value)
            for run in range(base.monte_carlo_runs):
                jobs.append((config, base.seed, run))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            metrics_list = list(pool.map(_episode_job, jobs))
    else:
        metrics_list = [_episode_job(job) for job in jobs]

    rows = []
    index = 0
    for mode in modes:
        for value in values:
            for run in range(base.monte_carlo_runs):
                rows.append(SweepRow(mode, parameter, value, run, metrics_list[index]))
                index += 1
            if progress is not None:
                chunk = rows[-base.monte_carlo_runs:]
                mean = float(np.mean([r.metrics.avg_sum_aoi for r in chunk]))
                progress(mode, value, mean)
    return rows


def summarize(rows):
    """Per-(mode, value) mean and standard error of avg_sum_aoi."""
    groups = {}
    order = []
    for row in rows:
        key = (row.mode, row.parameter, row.value)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row.metrics.avg_sum_aoi)
    summary = []
    for key in order:
        samples = np.asarray(groups[key], dtype=float)
        stderr = (float(np.std(samples, ddof=1)) / np.sqrt(len(samples))
                  if len(samples) > 1 else 0.0)
        summary.append((key[0], key[1], key[2], float(np.mean(samples)), stderr,
                        len(samples)))
    return summary
