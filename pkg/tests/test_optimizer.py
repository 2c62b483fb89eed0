"""Per-slot optimization: lifted forms, SDP oracles, SCA recursion, AO loop."""

import numpy as np
import pytest

from staraoi import star_ris
from staraoi.channel import (ChannelSet, Pair, default_geometry,
                             sample_channel_set)
from staraoi.conic import OPTIMAL
from staraoi.optimizer import (SlotProblem, STATUS_INFEASIBLE,
                               STATUS_OPTIMAL, alternating_optimize,
                               build_lifted_forms, matched_init_beams,
                               realized_links, repair_beams, round_schedule,
                               solve_beamforming_sca, solve_tarc_scheduling_es,
                               solve_tarc_scheduling_ms, verify_decision)

SIGMA2 = 1e-2


def make_slot(seed, weights=(3.0, 2.0), m=8, n_t=4, gamma_th=2.0,
              energy_min=1e-2, power_budget=3.0, mode=star_ris.ES):
    channels = sample_channel_set(default_geometry(), m, n_t,
                                  np.random.default_rng(seed),
                                  sigma2_info=SIGMA2, sigma2_energy=SIGMA2)
    weights = Pair(*[float(w) for w in weights])
    availability = Pair(weights.t > 0, weights.r > 0)
    return SlotProblem(channels, weights, availability, gamma_th, energy_min,
                       power_budget, mode)


def unit_slot(weights, availability, gamma_th, energy_min, power_budget=3.0):
    """M = 1, N_t = 1 surface with every channel entry equal to one."""
    one = np.ones(1, dtype=complex)
    channels = ChannelSet(np.ones((1, 1), dtype=complex), one, one.copy(),
                          one.copy(), one.copy(), Pair(1.0, 1.0), Pair(1.0, 1.0))
    return SlotProblem(channels, Pair(*weights), Pair(*availability), gamma_th,
                       energy_min, power_budget, star_ris.ES)


def test_slot_problem_validation():
    with pytest.raises(ValueError):
        make_slot(0, gamma_th=0.0)
    with pytest.raises(ValueError):
        make_slot(0, power_budget=0.0)
    with pytest.raises(ValueError):
        make_slot(0, energy_min=-1.0)
    with pytest.raises(ValueError):
        make_slot(0, mode="hybrid")
    with pytest.raises(ValueError):
        unit_slot((1.0, 0.0), (False, False), 1.0, 0.0)
    with pytest.raises(ValueError):
        unit_slot((-1.0, 0.0), (True, False), 1.0, 0.0)


def test_build_lifted_forms_rank_one():
    rng = np.random.default_rng(1)
    channels = sample_channel_set(default_geometry(), 6, 3, rng)
    zero = Pair(np.zeros(3, dtype=complex), np.zeros(3, dtype=complex))
    beams = Pair(rng.standard_normal(3) + 1j * rng.standard_normal(3),
                 rng.standard_normal(3) + 1j * rng.standard_normal(3))
    p_i, v_e = build_lifted_forms(channels, beams, zero)
    for side in ("t", "r"):
        eigvals = np.linalg.eigvalsh(getattr(p_i, side))
        assert eigvals[0] >= -1e-12
        assert eigvals[-2] <= 1e-10 * eigvals[-1]
        np.testing.assert_array_equal(getattr(v_e, side), np.zeros((6, 6)))


def _stage1_grid_oracle(slot, w_gain, v_gain):
    """Brute force over alpha (1e-3 grid) and binary schedules."""
    sigma2 = slot.channels.sigma2_info.t
    best = None
    for alpha in np.arange(0.0, 1.0 + 1e-9, 1e-3):
        if v_gain * alpha < slot.energy_min or v_gain * (1 - alpha) < slot.energy_min:
            continue
        for s_t, s_r in ((0, 0), (0, 1), (1, 0)):
            if w_gain * alpha < s_t * slot.gamma_th * sigma2:
                continue
            if w_gain * (1 - alpha) < s_r * slot.gamma_th * sigma2:
                continue
            value = slot.weights.t * s_t + slot.weights.r * s_r
            if best is None or value > best:
                best = value
    return best


def test_stage1_matches_grid_oracle_on_unit_surface():
    # On the M = 1 surface the relaxed SDP collapses to a one-variable
    # split; a 1e-3 grid search over alpha certifies the optimum.
    slot = unit_slot((5.0, 1.0), (True, True), gamma_th=0.4, energy_min=0.01)
    info = Pair(np.ones(1, dtype=complex), np.ones(1, dtype=complex))
    gain = np.sqrt(slot.power_budget / 2.0)
    energy = Pair(gain * np.ones(1, dtype=complex), gain * np.ones(1, dtype=complex))
    result = solve_tarc_scheduling_es(slot, info, energy)
    assert result.status == STATUS_OPTIMAL
    oracle = _stage1_grid_oracle(slot, 1.0, slot.power_budget / 2.0)
    assert oracle == 5.0
    assert result.objective == pytest.approx(oracle, abs=5e-3)
    assert result.s.t >= 0.999 and result.s.r <= 1e-3
    alpha = result.alpha_t[0]
    assert alpha * 1.0 >= slot.gamma_th * 1.0 - 1e-5
    assert alpha * 1.5 >= slot.energy_min - 1e-6
    assert (1 - alpha) * 1.5 >= slot.energy_min - 1e-6


def test_stage1_certifies_infeasible_energy():
    # The harvest target exceeds what any split can deliver; the grid
    # oracle finds no feasible point and the solver must agree.
    slot = unit_slot((5.0, 1.0), (True, True), gamma_th=0.4, energy_min=2.0)
    info = Pair(np.ones(1, dtype=complex), np.ones(1, dtype=complex))
    gain = np.sqrt(slot.power_budget / 2.0)
    energy = Pair(gain * np.ones(1, dtype=complex), gain * np.ones(1, dtype=complex))
    assert _stage1_grid_oracle(slot, 1.0, slot.power_budget / 2.0) is None
    result = solve_tarc_scheduling_es(slot, info, energy)
    assert result.status == STATUS_INFEASIBLE
    assert result.phi is None


def test_stage1_zero_weights():
    slot = make_slot(3, weights=(0.0, 0.0))
    info, energy = matched_init_beams(slot)
    result = solve_tarc_scheduling_es(slot, info, energy)
    assert result.status == STATUS_OPTIMAL
    assert result.s == Pair(0.0, 0.0)
    _, v_e = build_lifted_forms(slot.channels, info, energy)
    for side in ("t", "r"):
        harvested = float(np.real(np.trace(getattr(v_e, side) @
                                           getattr(result.phi, side))))
        assert harvested >= slot.energy_min - 1e-6


def test_stage1_fixed_pattern_support():
    slot = make_slot(4, mode=star_ris.CONVENTIONAL)
    pattern = star_ris.conventional_pattern(slot.channels.m)
    info, energy = matched_init_beams(slot)
    result = solve_tarc_scheduling_es(slot, info, energy, alpha_fixed=pattern)
    assert result.status == STATUS_OPTIMAL
    np.testing.assert_allclose(result.alpha_t, pattern, atol=1e-6)
    dark = pattern == 0.0
    assert np.max(np.abs(result.phi.t[np.ix_(dark, dark)])) == 0.0
    assert np.max(np.abs(result.phi.r[np.ix_(~dark, ~dark)])) == 0.0


def _newton_iterates(start, target, count):
    w = start
    out = []
    for _ in range(count):
        w = (target + w * w) / (2.0 * w)
        out.append(w)
    return out


def test_sca_traces_scalar_newton_recursion():
    # With c = 1 and gamma_th = 4 the tight point of each linearized
    # constraint obeys 2 w0 w - w0^2 = 4, the Newton iteration for
    # sqrt(4); the beam stage must trace it from w0 = 1.
    slot = unit_slot((1.0, 0.0), (True, False), gamma_th=4.0, energy_min=0.0,
                     power_budget=100.0)
    phi = Pair(np.ones((1, 1), dtype=complex), np.ones((1, 1), dtype=complex))
    start_info = Pair(np.ones(1, dtype=complex), np.zeros(1, dtype=complex))
    start_energy = Pair(np.zeros(1, dtype=complex), np.zeros(1, dtype=complex))

    expected = _newton_iterates(1.0, 4.0, 3)
    for count, target in zip((1, 2, 3), expected):
        partial = solve_beamforming_sca(slot, phi, start_info, start_energy,
                                        max_sca_iters=count)
        assert np.linalg.norm(partial.info_beams.t) == pytest.approx(target,
                                                                     abs=1e-4)

    result = solve_beamforming_sca(slot, phi, start_info, start_energy,
                                   max_sca_iters=10)
    assert result.status == OPTIMAL
    assert result.converged and result.iterations <= 10
    assert abs(np.linalg.norm(result.info_beams.t) - 2.0) <= 1e-3
    assert result.s.t == pytest.approx(1.0, abs=1e-6)
    assert result.s.r == 0.0
    assert result.objective == pytest.approx(1.0, abs=1e-6)


def test_sca_beams_feasible_for_true_constraints():
    # The linearization underestimates c |w|^2, so surrogate-feasible
    # beams must satisfy the true scalarized constraints as well.
    slot = make_slot(5)
    info, energy = matched_init_beams(slot)
    stage1 = solve_tarc_scheduling_es(slot, info, energy)
    assert stage1.status == STATUS_OPTIMAL
    stage2 = solve_beamforming_sca(slot, stage1.phi, info, energy)
    assert stage2.status == OPTIMAL
    power = 0.0
    for side in ("t", "r"):
        d = np.conj(getattr(slot.channels, "f_" + side))[:, None] * slot.channels.g
        c = np.real(np.trace(d @ d.conj().T @ getattr(stage1.phi, side))) / SIGMA2
        w = getattr(stage2.info_beams, side)
        assert c * np.linalg.norm(w) ** 2 >= getattr(stage2.s, side) * slot.gamma_th - 1e-5
        d_e = np.conj(getattr(slot.channels, "u_" + side))[:, None] * slot.channels.g
        c_e = np.real(np.trace(d_e @ d_e.conj().T @ getattr(stage1.phi, side)))
        v = getattr(stage2.energy_beams, side)
        assert c_e * np.linalg.norm(v) ** 2 >= slot.energy_min - 1e-5
        power += np.linalg.norm(w) ** 2 + np.linalg.norm(v) ** 2
    assert power <= slot.power_budget + 1e-6


def test_round_schedule_examples():
    always = lambda cand: True
    assert round_schedule(Pair(0.7, 0.2), Pair(1.0, 1.0), always) == Pair(True, False)

    calls = []
    def never(cand):
        calls.append(cand)
        return False
    assert round_schedule(Pair(0.0, 0.0), Pair(1.0, 1.0), never) == Pair(False, False)
    assert calls == []

    assert round_schedule(Pair(0.5, 0.5), Pair(1.0, 3.0), never) == Pair(False, False)
    assert calls == [Pair(False, True), Pair(True, False)]


def test_matched_init_beams_use_full_budget():
    slot = make_slot(6)
    info, energy = matched_init_beams(slot)
    power = sum(np.linalg.norm(getattr(beams, side)) ** 2
                for beams in (info, energy) for side in ("t", "r"))
    assert power == pytest.approx(slot.power_budget, rel=1e-9)
    assert np.linalg.norm(info.t) ** 2 == pytest.approx(slot.power_budget / 4,
                                                        rel=1e-9)


def test_repair_beams_hit_targets_exactly():
    slot = make_slot(7, gamma_th=0.5)
    profile = star_ris.uniform_split_profile(slot.channels.m)
    repaired = repair_beams(slot, profile, Pair(True, False))
    assert repaired is not None
    info, energy = repaired
    snr_vals, energy_vals = realized_links(slot, profile, info, energy)
    assert slot.gamma_th <= snr_vals.t <= slot.gamma_th * (1 + 1e-6)
    assert np.linalg.norm(info.r) == 0.0
    for side in ("t", "r"):
        assert slot.energy_min <= getattr(energy_vals, side) <= slot.energy_min * (1 + 1e-6)

    starved = make_slot(7, power_budget=1e-9)
    assert repair_beams(starved, profile, Pair(True, False)) is None


def test_verify_decision_rejections():
    slot = unit_slot((1.0, 1.0), (True, True), gamma_th=2.0, energy_min=0.5,
                     power_budget=4.0)
    w = Pair(np.ones(1, dtype=complex), np.zeros(1, dtype=complex))
    v = Pair(np.ones(1, dtype=complex), np.ones(1, dtype=complex))
    good = Pair(True, False)
    assert verify_decision(slot, good, w, v, Pair(5.0, 0.0), Pair(1.0, 1.0))
    assert not verify_decision(slot, Pair(True, True), w, v, Pair(5.0, 5.0),
                               Pair(1.0, 1.0))
    assert not verify_decision(slot, good, w, v, Pair(1.9, 0.0), Pair(1.0, 1.0))
    assert not verify_decision(slot, good, w, v, Pair(5.0, 0.0), Pair(0.4, 1.0))
    big = Pair(2.0 * np.ones(1, dtype=complex), np.zeros(1, dtype=complex))
    assert not verify_decision(slot, good, big, v, Pair(5.0, 0.0), Pair(1.0, 1.0))


def test_alternating_zero_weights_single_iteration():
    slot = make_slot(8, weights=(0.0, 0.0))
    decision = alternating_optimize(slot, rng=np.random.default_rng(0))
    assert decision.status == STATUS_OPTIMAL
    assert decision.schedule == Pair(False, False)
    assert decision.objective == 0.0
    assert decision.ao_iterations == 1
    for side in ("t", "r"):
        assert getattr(decision.realized_energy, side) >= slot.energy_min - 1e-5


def test_alternating_monotone_and_constraint_safe():
    optimal = 0
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        weights = tuple(float(w) for w in rng.integers(1, 7, size=2))
        slot = make_slot(seed, weights=weights)
        decision = alternating_optimize(slot, rng=rng)
        trace = decision.objective_trace
        assert all(b >= a - 1e-6 for a, b in zip(trace, trace[1:]))
        assert not (decision.schedule.t and decision.schedule.r)
        if decision.status == STATUS_OPTIMAL:
            optimal += 1
            for side in ("t", "r"):
                assert getattr(decision.realized_energy, side) >= slot.energy_min - 1e-5
                if getattr(decision.schedule, side):
                    assert getattr(decision.realized_snr, side) >= slot.gamma_th - 1e-5
            power = sum(np.linalg.norm(getattr(beams, side)) ** 2
                        for beams in (decision.info_beams, decision.energy_beams)
                        for side in ("t", "r"))
            assert power <= slot.power_budget * (1 + 1e-9) + 1e-12
    assert optimal >= 7


def test_alternating_prefers_heavier_stream():
    # Enumeration oracle: on the same channels either stream can be made
    # the scheduled one by making it the heavier, so the (5, 1) choice of
    # stream t is a genuine weight preference, not forced feasibility.
    heavy_t = alternating_optimize(make_slot(2, weights=(5.0, 1.0)),
                                   rng=np.random.default_rng(0))
    heavy_r = alternating_optimize(make_slot(2, weights=(1.0, 5.0)),
                                   rng=np.random.default_rng(0))
    assert heavy_t.status == STATUS_OPTIMAL
    assert heavy_t.schedule == Pair(True, False)
    assert heavy_r.status == STATUS_OPTIMAL
    assert heavy_r.schedule == Pair(False, True)


def test_alternating_infeasible_slot():
    slot = make_slot(9, gamma_th=1e12, energy_min=1e3)
    decision = alternating_optimize(slot, rng=np.random.default_rng(0))
    assert decision.status == STATUS_INFEASIBLE
    assert decision.schedule == Pair(False, False)
    assert decision.objective == 0.0
    for side in ("t", "r"):
        assert np.linalg.norm(getattr(decision.info_beams, side)) == 0.0


def test_relaxed_mode_objective_ordering():
    # Fixing amplitudes can only shrink the feasible set: ES >= MS >= CONV.
    for seed in (11, 12, 13):
        slot = make_slot(seed, energy_min=1e-6)
        info, energy = matched_init_beams(slot)
        es = solve_tarc_scheduling_es(slot, info, energy)
        ms = solve_tarc_scheduling_ms(slot, info, energy)
        conv = solve_tarc_scheduling_es(
            slot, info, energy,
            alpha_fixed=star_ris.conventional_pattern(slot.channels.m))
        assert es.status == STATUS_OPTIMAL
        if ms.phi is not None:
            assert es.solver_objective >= ms.solver_objective - 1e-5
        if ms.phi is not None and conv.status == STATUS_OPTIMAL:
            assert ms.solver_objective >= conv.solver_objective - 1e-5


def test_ms_binarity_on_small_surface():
    slot = make_slot(14, weights=(4.0, 2.0), m=4, n_t=2, gamma_th=0.5,
                     energy_min=1e-6, mode=star_ris.MS)
    info, energy = matched_init_beams(slot)
    ms = solve_tarc_scheduling_ms(slot, info, energy)
    assert ms.status == STATUS_OPTIMAL
    assert ms.binarity_gap <= star_ris.BINARY_TOL
    assert star_ris.binarity_gap(ms.alpha_t) <= 1e-3
    assert ms.penalty_iterations >= 1
    es = solve_tarc_scheduling_es(slot, info, energy)
    assert ms.solver_objective <= es.solver_objective + 1e-6
