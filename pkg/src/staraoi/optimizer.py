"""Per-slot joint scheduling, TaRC and beamforming optimization.

Each slot alternates two convex stages until the weighted scheduling
objective sum_k weight_k * s_k stabilizes: a semidefinite program over
the lifted TaRC profiles and relaxed schedule (with a difference-of-
convex penalty when amplitudes must go binary), and a second-order-cone
beamforming step built from first-order surrogates of the quadratic
link constraints. The relaxed solution is then realized: rank-one TaRC
recovery, schedule rounding, a closed-form matched min-power beam
repair, and exact re-verification of every original constraint.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import star_ris
from .channel import Pair, SIDES, cascade, harvested_energy, snr
from .conic import (COMPLEX_VECTOR, HERMITIAN, SCALAR, INFEASIBLE, NUMERICAL_FAILURE,
                    OPTIMAL, ConicProblem, ConicSolution, DiagConstraint, LinConstraint,
                    LinExpr, PSDConstraint, SOCConstraint, VarBlock, linexpr_value,
                    solve_conic, validate_problem)

AO_MAX_ITERS = 20
SCA_MAX_ITERS = 30
PENALTY_MAX_ITERS = 10
CONVERGENCE_TOL = 1e-3
IN_LOOP_TOL = 1e-6
SCA_TOL = 1e-6
NUM_RANDOMIZATIONS = 50
SLOT_TIME_BUDGET = 10.0
REPAIR_MARGIN = 1e-9

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAX_ITERATIONS = "max-iterations"


@dataclass(frozen=True)
class SlotProblem:
    """One slot's optimization inputs."""

    channels: object
    weights: Pair
    availability: Pair
    gamma_th: float
    energy_min: float
    power_budget: float
    mode: str

    def __post_init__(self):
        if self.gamma_th <= 0:
            raise ValueError("gamma_th must be positive")
        if self.power_budget <= 0:
            raise ValueError("power_budget must be positive")
        if self.energy_min < 0:
            raise ValueError("energy_min must be nonnegative")
        if self.mode not in star_ris.MODES:
            raise ValueError("unknown mode %r" % (self.mode,))
        for side in SIDES:
            weight = getattr(self.weights, side)
            if weight < 0:
                raise ValueError("weights must be nonnegative")
            if weight > 0 and not getattr(self.availability, side):
                raise ValueError("positive weight requires an available packet")


@dataclass
class SlotDecision:
    schedule: Pair
    info_beams: Pair
    energy_beams: Pair
    tarc: object
    status: str
    objective: float
    ao_iterations: int
    objective_trace: list
    realized_snr: Pair
    realized_energy: Pair


@dataclass
class TarcSchedulingResult:
    status: str
    phi: object
    s: Pair
    alpha_t: object
    objective: float
    solver_objective: float
    binarity_gap: float
    penalty_iterations: int


@dataclass
class BeamformingResult:
    status: str
    info_beams: Pair
    energy_beams: Pair
    s: Pair
    objective: float
    iterations: int
    converged: bool


def _info_channel(channels, side):
    return channels.f_t if side == "t" else channels.f_r


def _energy_channel(channels, side):
    return channels.u_t if side == "t" else channels.u_r


def build_lifted_forms(channels, info_beams, energy_beams):
    """Rank-one matrices P_I^k = p p^H and V_E^k = q q^H per side.

    p = diag(f^H) G w and q = diag(u^H) G v, so that tr(P_I lift(l))
    equals the realized squared modulus through the surface.
    """
    p_i = {}
    v_e = {}
    for side in SIDES:
        p = cascade(_info_channel(channels, side), channels.g) @ getattr(info_beams, side)
        q = cascade(_energy_channel(channels, side), channels.g) @ getattr(energy_beams, side)
        p_i[side] = np.outer(p, np.conj(p))
        v_e[side] = np.outer(q, np.conj(q))
    return Pair(**p_i), Pair(**v_e)


def _weight_scale(slot):
    return max(float(max(slot.weights)), 1.0)


def _alpha_support(alpha_fixed, m):
    """Element indices each side may actually use.

    With a fixed amplitude split, elements pinned to zero force whole
    rows and columns of the lifting to vanish; keeping them in the SDP
    leaves the solver crawling along a degenerate PSD face (observed:
    100k SCS iterations on an 8x8 block). The stage-1 program is built
    on the nonzero support instead and re-embedded afterwards. An empty
    side keeps one zeroed element so infeasibility is still certified
    by the solver rather than special-cased.
    """
    if alpha_fixed is None:
        full = np.arange(m)
        return {side: full for side in SIDES}
    alpha = np.asarray(alpha_fixed, dtype=float)
    support = {"t": np.where(alpha > 1e-12)[0],
               "r": np.where(1.0 - alpha > 1e-12)[0]}
    for side in SIDES:
        if support[side].size == 0:
            support[side] = np.arange(1)
    return support


def _stage1_problem(slot, p_i, v_e, penalty=None, alpha_fixed=None):
    """Lifted TaRC / scheduling program, normalized for the solver.

    SNR constraints are divided by sigma2 * gamma_th and energy
    constraints by the harvest target, so every trace coefficient is
    O(1) relative to its bound. When all weights vanish the objective
    switches to a bounded epigraph of the worst energy margin so the
    solver still returns a purposeful profile. Returns the problem and
    the per-side element support it was built on.
    """
    m = slot.channels.m
    support = _alpha_support(alpha_fixed, m)
    energy_margin = float(max(slot.weights)) == 0.0
    scale = _weight_scale(slot)
    blocks = [VarBlock("phi_t", HERMITIAN, len(support["t"])),
              VarBlock("phi_r", HERMITIAN, len(support["r"])),
              VarBlock("s_t", SCALAR, 1), VarBlock("s_r", SCALAR, 1)]
    if energy_margin:
        blocks.append(VarBlock("tau", SCALAR, 1))

    def restrict(matrix, side):
        idx = support[side]
        return np.asarray(matrix, dtype=complex)[np.ix_(idx, idx)]

    objective = LinExpr()
    for side in SIDES:
        objective.add("s_" + side, getattr(slot.weights, side) / scale)
    if penalty is not None:
        mu, alpha0 = penalty
        for side in SIDES:
            a0 = alpha0 if side == "t" else 1.0 - alpha0
            coeff = np.diag(-(mu / scale) * (1.0 - 2.0 * a0)).astype(complex)
            objective.add("phi_" + side, restrict(coeff, side))
    if energy_margin:
        objective.add("tau", 1.0)

    cons = []
    for side in SIDES:
        cons.append(LinConstraint(LinExpr({"s_" + side: 1.0})))
        cons.append(LinConstraint(LinExpr({"s_" + side: -1.0}, 1.0)))
    cons.append(LinConstraint(LinExpr({"s_t": -1.0, "s_r": -1.0}, 1.0)))
    for side in SIDES:
        if getattr(slot.availability, side):
            sigma2 = getattr(slot.channels.sigma2_info, side)
            target = sigma2 * slot.gamma_th
            # row scaling: never let a slack target blow the trace
            # coefficients past O(1), or the solver conditioning dies
            denom = max(target, float(np.real(np.trace(getattr(p_i, side)))))
            cons.append(LinConstraint(LinExpr({"phi_" + side: restrict(getattr(p_i, side) / denom, side),
                                               "s_" + side: -target / denom})))
        else:
            cons.append(LinConstraint(LinExpr({"s_" + side: -1.0})))
    if slot.energy_min > 0 or energy_margin:
        for side in SIDES:
            trace_v = float(np.real(np.trace(getattr(v_e, side))))
            denom = max(slot.energy_min, trace_v, 1e-300)
            expr = LinExpr({"phi_" + side: restrict(getattr(v_e, side) / denom, side)},
                           -slot.energy_min / denom)
            if energy_margin:
                expr.add("tau", -1.0)
            cons.append(LinConstraint(expr))
    if energy_margin:
        cons.append(LinConstraint(LinExpr({"tau": -1.0}, 10.0)))
    if alpha_fixed is None:
        cons.append(DiagConstraint({"phi_t": 1.0, "phi_r": 1.0}, np.ones(m)))
    else:
        alpha = np.asarray(alpha_fixed, dtype=float)
        cons.append(DiagConstraint({"phi_t": 1.0}, alpha[support["t"]]))
        cons.append(DiagConstraint({"phi_r": 1.0}, (1.0 - alpha)[support["r"]]))
    cons.append(PSDConstraint("phi_t"))
    cons.append(PSDConstraint("phi_r"))
    return ConicProblem(blocks, objective, cons), support


def _stage1_result(slot, solution, support=None, binarity=None, penalty_iterations=0):
    if solution.status != OPTIMAL:
        return TarcSchedulingResult(solution.status, None, Pair(0.0, 0.0), None,
                                    0.0, float("nan"), float("nan"), penalty_iterations)
    m = slot.channels.m
    s = {}
    for side in SIDES:
        value = min(max(solution.values["s_" + side], 0.0), 1.0)
        if getattr(slot.weights, side) == 0.0:
            value = 0.0
        s[side] = value
    phi = {}
    for side in SIDES:
        block = solution.values["phi_" + side]
        if support is None or len(support[side]) == m:
            phi[side] = block
        else:
            idx = support[side]
            full = np.zeros((m, m), dtype=complex)
            full[np.ix_(idx, idx)] = block
            phi[side] = full
    phi = Pair(**phi)
    alpha_t = np.clip(np.real(np.diag(phi.t)), 0.0, 1.0)
    objective = sum(getattr(slot.weights, side) * s[side] for side in SIDES)
    gap = star_ris.binarity_gap(alpha_t) if binarity is None else binarity
    return TarcSchedulingResult(OPTIMAL, phi, Pair(**s), alpha_t, objective,
                                solution.objective, gap, penalty_iterations)


def solve_tarc_scheduling_es(slot, info_beams, energy_beams, alpha_fixed=None,
                             tolerance=IN_LOOP_TOL):
    """Relaxed TaRC/scheduling stage for ES (or a fixed amplitude split)."""
    p_i, v_e = build_lifted_forms(slot.channels, info_beams, energy_beams)
    problem, support = _stage1_problem(slot, p_i, v_e, alpha_fixed=alpha_fixed)
    return _stage1_result(slot, solve_conic(problem, tolerance), support=support)


def solve_tarc_scheduling_ms(slot, info_beams, energy_beams, mu=None,
                             max_penalty_iters=PENALTY_MAX_ITERS, tolerance=IN_LOOP_TOL):
    """Mode-switching stage: penalized iterations driving amplitudes binary.

    The concave reward alpha - alpha^2 is majorized by
    g(a0, a) = a0^2 + (1 - 2 a0) a, tight at the expansion point, so each
    iteration subtracts mu * g from the scheduling objective. The first
    pass expands at 0.5 where the penalty gradient vanishes (a pure ES
    solve); mu then doubles until the amplitudes are within 1e-3 of
    binary. The rounded pattern is polished with fixed amplitudes and
    compared against the conventional half split, keeping the better.
    """
    p_i, v_e = build_lifted_forms(slot.channels, info_beams, energy_beams)
    m = slot.channels.m
    if mu is None:
        # Kept on the order of the normalized scheduling objective;
        # much larger starting penalties (1e3 and up) mix coefficient
        # scales badly enough that the conic solver fails outright on
        # the second expansion. Ten doublings still reach 512x.
        mu = float(max(slot.weights)) + 1.0
    alpha0 = np.full(m, 0.5)
    gap = float("nan")
    iterations = 0
    for iterations in range(1, max_penalty_iters + 1):
        problem, _ = _stage1_problem(slot, p_i, v_e, penalty=(mu, alpha0))
        solution = solve_conic(problem, tolerance)
        if solution.status != OPTIMAL:
            if iterations == 1:
                return _stage1_result(slot, solution, penalty_iterations=iterations)
            # keep the last good expansion point and go round it
            break
        alpha0 = np.clip(np.real(np.diag(solution.values["phi_t"])), 0.0, 1.0)
        previous_gap = gap
        gap = star_ris.binarity_gap(alpha0)
        if gap <= star_ris.BINARY_TOL:
            break
        if previous_gap == previous_gap and previous_gap - gap < 1e-4:
            # a binding constraint holds fractional amplitude mass that
            # no penalty weight can push through; stop burning solves
            break
        mu *= 2.0

    patterns = [star_ris.round_binary(alpha0)]
    conventional = star_ris.conventional_pattern(m) if m >= 2 else None
    if conventional is not None and not np.array_equal(patterns[0], conventional):
        patterns.append(conventional)
    best = None
    for pattern in patterns:
        problem, support = _stage1_problem(slot, p_i, v_e, alpha_fixed=pattern)
        solution = solve_conic(problem, tolerance)
        if solution.status != OPTIMAL:
            continue
        result = _stage1_result(slot, solution, support=support, binarity=gap,
                                penalty_iterations=iterations)
        if best is None or result.solver_objective > best.solver_objective + 1e-12:
            best = result
    if best is None:
        return TarcSchedulingResult(INFEASIBLE, None, Pair(0.0, 0.0), None, 0.0,
                                    float("nan"), gap, iterations)
    if gap > star_ris.BINARY_TOL:
        best.status = STATUS_MAX_ITERATIONS
    return best


def _beam_change(old, new):
    return max(float(np.linalg.norm(getattr(new, name) - getattr(old, name)))
               for name in SIDES)


def solve_beamforming_sca(slot, phi, start_info, start_energy,
                          max_sca_iters=SCA_MAX_ITERS, tolerance=SCA_TOL):
    """Beamforming stage via successive convex approximation.

    With the lifted profile fixed, each link quality is modeled as
    c * |beam|^2 with the scalar c = tr(DD^H phi) / sigma2 (D the
    cascaded channel), and the quadratic is replaced by its tangent at
    the previous beams, yielding a second-order-cone program. The
    schedule is re-optimized alongside the beams; a small power
    tiebreak keeps the returned beams minimal among maximizers, so the
    accepted iterates sit on the constraint boundary and trace the
    classic scalar recursion 2 w0 w - w0^2 = target. The tiebreak
    must stay well above the solver tolerance, otherwise the beams
    wander inside the optimal face and the change criterion never
    fires; these cone programs are small, so they are solved tightly.
    """
    channels = slot.channels
    n_t = channels.n_t
    scale = _weight_scale(slot)
    wmax = float(max(slot.weights))
    rho = 1e-3 * (1.0 + wmax)

    c_info = {}
    c_energy = {}
    for side in SIDES:
        d = cascade(_info_channel(channels, side), channels.g)
        sigma2 = getattr(channels.sigma2_info, side)
        c_info[side] = max(float(np.real(np.vdot(d @ d.conj().T, getattr(phi, side)))) / sigma2, 0.0)
        d_e = cascade(_energy_channel(channels, side), channels.g)
        c_energy[side] = max(float(np.real(np.vdot(d_e @ d_e.conj().T, getattr(phi, side)))), 0.0)

    blocks = [VarBlock("w_t", COMPLEX_VECTOR, n_t), VarBlock("w_r", COMPLEX_VECTOR, n_t),
              VarBlock("v_t", COMPLEX_VECTOR, n_t), VarBlock("v_r", COMPLEX_VECTOR, n_t),
              VarBlock("s_t", SCALAR, 1), VarBlock("s_r", SCALAR, 1),
              VarBlock("t_pow", SCALAR, 1)]
    objective = LinExpr()
    for side in SIDES:
        objective.add("s_" + side, getattr(slot.weights, side) / scale)
    objective.add("t_pow", -rho / scale)

    info = Pair(np.asarray(start_info.t, dtype=complex),
                np.asarray(start_info.r, dtype=complex))
    energy = Pair(np.asarray(start_energy.t, dtype=complex),
                  np.asarray(start_energy.r, dtype=complex))
    s_out = Pair(0.0, 0.0)
    status = OPTIMAL
    iterations = 0
    converged = False
    for iterations in range(1, max_sca_iters + 1):
        cons = []
        for side in SIDES:
            cons.append(LinConstraint(LinExpr({"s_" + side: 1.0})))
            cons.append(LinConstraint(LinExpr({"s_" + side: -1.0}, 1.0)))
        cons.append(LinConstraint(LinExpr({"s_t": -1.0, "s_r": -1.0}, 1.0)))
        for side in SIDES:
            c = c_info[side]
            if getattr(slot.availability, side) and c > 0.0:
                w0 = getattr(info, side)
                denom = max(slot.gamma_th, c)
                coeff = (2.0 * c / denom) * w0
                const = -(c / denom) * float(np.linalg.norm(w0) ** 2)
                cons.append(LinConstraint(LinExpr({"w_" + side: coeff,
                                                   "s_" + side: -slot.gamma_th / denom},
                                                  const)))
            else:
                cons.append(LinConstraint(LinExpr({"s_" + side: -1.0})))
        if slot.energy_min > 0:
            for side in SIDES:
                ce = c_energy[side]
                v0 = getattr(energy, side)
                denom = max(slot.energy_min, ce)
                coeff = (2.0 * ce / denom) * v0
                const = (-(ce / denom) * float(np.linalg.norm(v0) ** 2)
                         - slot.energy_min / denom)
                cons.append(LinConstraint(LinExpr({"v_" + side: coeff}, const)))
        cons.append(SOCConstraint(LinExpr({"t_pow": 1.0}),
                                  ("w_t", "w_r", "v_t", "v_r")))
        cons.append(LinConstraint(LinExpr({"t_pow": -1.0}, np.sqrt(slot.power_budget))))
        solution = solve_conic(ConicProblem(blocks, objective, cons), tolerance)
        if solution.status != OPTIMAL:
            status = solution.status
            break
        new_info = Pair(solution.values["w_t"], solution.values["w_r"])
        new_energy = Pair(solution.values["v_t"], solution.values["v_r"])
        s = {}
        for side in SIDES:
            value = min(max(solution.values["s_" + side], 0.0), 1.0)
            if getattr(slot.weights, side) == 0.0:
                value = 0.0
            s[side] = value
        s_out = Pair(**s)
        change = max(_beam_change(info, new_info), _beam_change(energy, new_energy))
        info, energy = new_info, new_energy
        if change < CONVERGENCE_TOL:
            converged = True
            break

    objective_value = sum(getattr(slot.weights, side) * getattr(s_out, side)
                          for side in SIDES)
    return BeamformingResult(status, info, energy, s_out, objective_value,
                             iterations, converged)


def round_schedule(s_relaxed, weights, feasibility_check):
    """Round a relaxed schedule to at most one boolean stream.

    Candidates are the streams with positive weight * s (larger product
    first, stream t on ties), then the empty schedule, which always
    passes.
    """
    scores = []
    for side in SIDES:
        score = getattr(weights, side) * getattr(s_relaxed, side)
        if score > 0.0:
            scores.append((side, score))
    scores.sort(key=lambda item: (-item[1], SIDES.index(item[0])))
    for side, _ in scores:
        candidate = Pair(side == "t", side == "r")
        if feasibility_check(candidate):
            return candidate
    return Pair(False, False)


def _matched_direction(row):
    gain = float(np.linalg.norm(row) ** 2)
    if gain == 0.0:
        direction = np.zeros(row.shape[0], dtype=complex)
        direction[0] = 1.0
        return direction, 0.0
    return np.conj(row) / np.linalg.norm(row), gain


def matched_init_beams(slot):
    """Matched-filter starting beams through an even split, zero phases.

    Each of the four beams gets an equal share of the power budget, so
    the starting point satisfies the power constraint with equality.
    """
    channels = slot.channels
    profile = star_ris.uniform_split_profile(channels.m)
    share = np.sqrt(slot.power_budget / 4.0)
    info = {}
    energy = {}
    for side in SIDES:
        diag = star_ris.tarc_diagonal(profile, side)
        direction, _ = _matched_direction(diag @ cascade(_info_channel(channels, side),
                                                         channels.g))
        info[side] = share * direction
        direction, _ = _matched_direction(diag @ cascade(_energy_channel(channels, side),
                                                         channels.g))
        energy[side] = share * direction
    return Pair(**info), Pair(**energy)


def repair_beams(slot, profile, schedule):
    """Closed-form minimal matched beams hitting every active target.

    Each needed beam points along the conjugate cascaded row and carries
    just enough power (with a hair of margin) to meet its SNR or energy
    target exactly; returns None when the budget cannot cover the total
    or a needed link is dead.
    """
    channels = slot.channels
    n_t = channels.n_t
    zero = np.zeros(n_t, dtype=complex)
    info = {"t": zero, "r": zero}
    energy = {"t": zero, "r": zero}
    total = 0.0
    for side in SIDES:
        diag = star_ris.tarc_diagonal(profile, side)
        if getattr(schedule, side):
            row = diag @ cascade(_info_channel(channels, side), channels.g)
            direction, gain = _matched_direction(row)
            if gain == 0.0:
                return None
            sigma2 = getattr(channels.sigma2_info, side)
            power = slot.gamma_th * sigma2 * (1.0 + REPAIR_MARGIN) / gain
            info[side] = np.sqrt(power) * direction
            total += power
        if slot.energy_min > 0:
            row = diag @ cascade(_energy_channel(channels, side), channels.g)
            direction, gain = _matched_direction(row)
            if gain == 0.0:
                return None
            power = slot.energy_min * (1.0 + REPAIR_MARGIN) / gain
            energy[side] = np.sqrt(power) * direction
            total += power
    if total > slot.power_budget:
        return None
    return Pair(**info), Pair(**energy)


def realized_links(slot, profile, info_beams, energy_beams):
    snr_vals = {}
    energy_vals = {}
    for side in SIDES:
        diag = star_ris.tarc_diagonal(profile, side)
        snr_vals[side] = snr(_info_channel(slot.channels, side), diag, slot.channels.g,
                             getattr(info_beams, side),
                             getattr(slot.channels.sigma2_info, side))
        energy_vals[side] = harvested_energy(_energy_channel(slot.channels, side), diag,
                                             slot.channels.g, getattr(energy_beams, side))
    return Pair(**snr_vals), Pair(**energy_vals)


def verify_decision(slot, schedule, info_beams, energy_beams, snr_vals, energy_vals):
    power = sum(float(np.linalg.norm(getattr(info_beams, side)) ** 2 +
                      np.linalg.norm(getattr(energy_beams, side)) ** 2)
                for side in SIDES)
    if power > slot.power_budget * (1.0 + 1e-9) + 1e-12:
        return False
    if schedule.t and schedule.r:
        return False
    for side in SIDES:
        if getattr(schedule, side) and getattr(snr_vals, side) < slot.gamma_th:
            return False
        if getattr(energy_vals, side) < slot.energy_min:
            return False
    return True


def _empty_decision(slot, status, ao_iterations, trace, objective=0.0, tarc=None):
    zero = np.zeros(slot.channels.n_t, dtype=complex)
    beams = Pair(zero, zero.copy())
    return SlotDecision(Pair(False, False), beams, Pair(zero.copy(), zero.copy()),
                        tarc, status, objective, ao_iterations, trace,
                        Pair(0.0, 0.0), Pair(0.0, 0.0))


def _extraction_eval(slot, p_i, v_e, s_relaxed, side):
    """Minimum normalized slack of the side's active constraints."""
    targets = []
    s_val = getattr(s_relaxed, side)
    if getattr(slot.availability, side) and s_val > 1e-9:
        sigma2 = getattr(slot.channels.sigma2_info, side)
        targets.append((getattr(p_i, side) / (sigma2 * slot.gamma_th), s_val))
    if slot.energy_min > 0:
        targets.append((getattr(v_e, side) / slot.energy_min, 1.0))

    def evaluate(candidate):
        if not targets:
            return 0.0
        lifted = star_ris.lift(candidate)
        return min(float(np.real(np.vdot(matrix, lifted))) / target - 1.0
                   for matrix, target in targets)

    return evaluate


def _extract_profile(slot, phi, p_i, v_e, s_relaxed, alpha_pattern, rng,
                     num_randomizations):
    if alpha_pattern is not None:
        amp_t = np.asarray(alpha_pattern, dtype=float)
        l_t = star_ris.extract_rank_one(phi.t,
                                        _extraction_eval(slot, p_i, v_e, s_relaxed, "t"),
                                        num_randomizations, rng, amp_target=amp_t)
        l_r = star_ris.extract_rank_one(phi.r,
                                        _extraction_eval(slot, p_i, v_e, s_relaxed, "r"),
                                        num_randomizations, rng, amp_target=1.0 - amp_t)
        return star_ris.from_lift_vectors(slot.mode, l_t, l_r, alpha_t=amp_t)
    l_t = star_ris.extract_rank_one(phi.t,
                                    _extraction_eval(slot, p_i, v_e, s_relaxed, "t"),
                                    num_randomizations, rng)
    alpha_t = np.clip(np.abs(l_t) ** 2, 0.0, 1.0)
    l_r = star_ris.extract_rank_one(phi.r,
                                    _extraction_eval(slot, p_i, v_e, s_relaxed, "r"),
                                    num_randomizations, rng, amp_target=1.0 - alpha_t)
    return star_ris.from_lift_vectors(slot.mode, l_t, l_r, alpha_t=alpha_t)


def alternating_optimize(slot, max_ao_iters=AO_MAX_ITERS, rng=None,
                         num_randomizations=NUM_RANDOMIZATIONS,
                         time_budget=SLOT_TIME_BUDGET):
    """Run the alternating per-slot optimization and realize the decision.

    Returns a SlotDecision whose realized SNR, harvested energy and
    power have been re-verified through the channel expressions; the
    relaxed objective trace across accepted alternating iterations is
    kept for monotonicity audits.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    start_time = time.monotonic()
    wmax = float(max(slot.weights))
    info_beams, energy_beams = matched_init_beams(slot)
    conventional = (star_ris.conventional_pattern(slot.channels.m)
                    if slot.mode == star_ris.CONVENTIONAL else None)

    best = None
    trace = []
    converged = False
    demoted = False
    ao_iterations = 0
    for ao_iterations in range(1, max_ao_iters + 1):
        if slot.mode == star_ris.MS:
            stage1 = solve_tarc_scheduling_ms(slot, info_beams, energy_beams)
        else:
            stage1 = solve_tarc_scheduling_es(slot, info_beams, energy_beams,
                                              alpha_fixed=conventional)
        if stage1.phi is None:
            if best is None:
                return _empty_decision(slot, STATUS_INFEASIBLE, ao_iterations, trace)
            # The rebalanced beams admit no relaxed profile under the
            # scalarized link model, so the alternation cannot improve
            # on the accepted iterate: a fixed point, not a failure.
            converged = True
            break
        if stage1.status == STATUS_MAX_ITERATIONS:
            demoted = True
        stage2 = solve_beamforming_sca(slot, stage1.phi, info_beams, energy_beams)
        if stage2.status != OPTIMAL:
            if best is None:
                return _empty_decision(slot, STATUS_INFEASIBLE, ao_iterations, trace)
            break
        objective = stage2.objective
        if best is not None and objective < best["objective"] - 1e-9:
            # The fresh profile/beam pair scores below the accepted
            # iterate, so no improving step exists from it: the
            # alternation is stationary at the best iterate.
            converged = True
            break
        info_beams, energy_beams = stage2.info_beams, stage2.energy_beams
        best = {"phi": stage1.phi, "alpha_t": stage1.alpha_t, "s": stage2.s,
                "info": info_beams, "energy": energy_beams, "objective": objective,
                "binarity_gap": stage1.binarity_gap}
        trace.append(objective)
        if wmax == 0.0:
            converged = True
            break
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < CONVERGENCE_TOL:
            converged = True
            break
        if time.monotonic() - start_time > time_budget:
            demoted = True
            break

    if best is None:
        return _empty_decision(slot, STATUS_INFEASIBLE, ao_iterations, trace)
    if not converged:
        demoted = True

    p_i, v_e = build_lifted_forms(slot.channels, best["info"], best["energy"])
    if slot.mode == star_ris.ES:
        alpha_pattern = None
    elif slot.mode == star_ris.CONVENTIONAL:
        alpha_pattern = conventional
    else:
        alpha_pattern = star_ris.round_binary(best["alpha_t"])
    profile = _extract_profile(slot, best["phi"], p_i, v_e, best["s"], alpha_pattern,
                               rng, num_randomizations)

    schedule = round_schedule(best["s"], slot.weights,
                              lambda cand: repair_beams(slot, profile, cand) is not None)
    repaired = repair_beams(slot, profile, schedule)
    if repaired is None:
        return _empty_decision(slot, STATUS_INFEASIBLE, ao_iterations, trace,
                               objective=best["objective"], tarc=profile)
    info_final, energy_final = repaired
    snr_vals, energy_vals = realized_links(slot, profile, info_final, energy_final)
    if not verify_decision(slot, schedule, info_final, energy_final, snr_vals,
                            energy_vals):
        return _empty_decision(slot, STATUS_INFEASIBLE, ao_iterations, trace,
                               objective=best["objective"], tarc=profile)
    status = STATUS_MAX_ITERATIONS if demoted else STATUS_OPTIMAL
    return SlotDecision(schedule, info_final, energy_final, profile, status,
                        best["objective"], ao_iterations, trace, snr_vals, energy_vals)
