"""STAR-RIS transmission-and-reflection coefficient profiles.

A profile holds per-element amplitudes and phases for the transmit (t)
and reflect (r) sides under energy conservation alpha_t + alpha_r = 1.
The module also provides the PSD lifting used by the convex subproblems
and Gaussian-randomization recovery of rank-one vectors.

Convention: to_vector returns entries sqrt(alpha) * exp(-1j*theta). The
physical per-element gain applied by the surface is the conjugate,
sqrt(alpha) * exp(+1j*theta); see tarc_diagonal. Only consistency
matters because every figure of merit is a squared modulus.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import Pair, SIDES

ES = "es"
MS = "ms"
CONVENTIONAL = "conventional"

MODES = (ES, MS, CONVENTIONAL)

BINARY_TOL = 1e-3


@dataclass(frozen=True)
class TarcProfile:
    """Per-element amplitude/phase pairs for both sides of the surface."""

    mode: str
    alpha_t: np.ndarray
    alpha_r: np.ndarray
    theta_t: np.ndarray
    theta_r: np.ndarray

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError("unknown mode %r" % (self.mode,))
        arrays = (self.alpha_t, self.alpha_r, self.theta_t, self.theta_r)
        m = self.alpha_t.shape[0]
        for arr in arrays:
            if arr.shape != (m,):
                raise ValueError("profile vectors must share length M")
            if np.iscomplexobj(arr):
                raise ValueError("profile vectors must be real")
        for alpha in (self.alpha_t, self.alpha_r):
            if np.any(alpha < -1e-12) or np.any(alpha > 1 + 1e-12):
                raise ValueError("amplitudes must lie in [0, 1]")
        if np.max(np.abs(self.alpha_t + self.alpha_r - 1.0)) > 1e-9:
            raise ValueError("per-element energy conservation violated")
        if self.mode in (MS, CONVENTIONAL):
            if binarity_gap(self.alpha_t) != 0.0:
                raise ValueError("mode %s requires binary amplitudes" % self.mode)
        if self.mode == CONVENTIONAL:
            if not np.array_equal(self.alpha_t, conventional_pattern(m)):
                raise ValueError("conventional mode uses the fixed half split")

    @property
    def m(self):
        return self.alpha_t.shape[0]


def _amplitude(profile, side):
    return profile.alpha_t if side == "t" else profile.alpha_r


def _phase(profile, side):
    return profile.theta_t if side == "t" else profile.theta_r


def to_vector(profile, side):
    """TaRC vector l for one side, entries sqrt(alpha) e^{-j theta}."""
    if side not in SIDES:
        raise ValueError("side must be 't' or 'r'")
    return np.sqrt(_amplitude(profile, side)) * np.exp(-1j * _phase(profile, side))


def tarc_diagonal(profile, side):
    """Physical per-element surface gain, the conjugate of to_vector.

    This is what channel.snr and channel.harvested_energy consume; the
    conjugate pairing makes tr(P_I lift(to_vector)) match the realized
    squared modulus exactly.
    """
    return np.conj(to_vector(profile, side))


def lift(l):
    """Rank-one PSD lifting l l^H of a TaRC vector."""
    l = np.asarray(l, dtype=complex)
    return np.outer(l, np.conj(l))


def conventional_pattern(m):
    """Transmit-side amplitude pattern of the conventional baseline.

    The first ceil(m/2) elements reflect only (alpha_t = 0), the rest
    transmit only (alpha_t = 1).
    """
    if m < 2:
        raise ValueError("conventional split needs at least 2 elements")
    n_reflect = math.ceil(m / 2)
    alpha_t = np.ones(m)
    alpha_t[:n_reflect] = 0.0
    return alpha_t


def make_conventional(m, theta_t=None, theta_r=None):
    """Conventional-RIS baseline profile; phases stay free to optimize."""
    alpha_t = conventional_pattern(m)
    if theta_t is None:
        theta_t = np.zeros(m)
    if theta_r is None:
        theta_r = np.zeros(m)
    return TarcProfile(CONVENTIONAL, alpha_t, 1.0 - alpha_t,
                       np.asarray(theta_t, dtype=float),
                       np.asarray(theta_r, dtype=float))


def make_profile(mode, alpha_t, theta_t, theta_r):
    """Profile with the reflect amplitudes set to the exact complement."""
    alpha_t = np.asarray(alpha_t, dtype=float)
    return TarcProfile(mode, alpha_t, 1.0 - alpha_t,
                       np.asarray(theta_t, dtype=float),
                       np.asarray(theta_r, dtype=float))


def uniform_split_profile(m, theta_t=None, theta_r=None):
    """ES profile with every element split evenly, default zero phases."""
    if theta_t is None:
        theta_t = np.zeros(m)
    if theta_r is None:
        theta_r = np.zeros(m)
    return make_profile(ES, np.full(m, 0.5), theta_t, theta_r)


def from_lift_vectors(mode, l_t, l_r, alpha_t=None):
    """Build a profile from recovered rank-one vectors.

    Amplitudes come from |l_t|^2 (or the explicit alpha_t override for
    binary modes) with the reflect side set to the exact complement, so
    energy conservation holds even when candidate clipping moved the
    magnitudes. Phases are chosen so that to_vector reproduces each l up
    to the amplitude adjustment.
    """
    l_t = np.asarray(l_t, dtype=complex)
    l_r = np.asarray(l_r, dtype=complex)
    if alpha_t is None:
        alpha_t = np.clip(np.abs(l_t) ** 2, 0.0, 1.0)
    theta_t = np.mod(-np.angle(l_t), 2 * np.pi)
    theta_r = np.mod(-np.angle(l_r), 2 * np.pi)
    return make_profile(mode, alpha_t, theta_t, theta_r)


def binarity_gap(alpha):
    """max_m min(alpha_m, 1 - alpha_m), zero iff the vector is binary."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.size == 0:
        raise ValueError("empty amplitude vector")
    return float(np.max(np.minimum(alpha, 1.0 - alpha)))


def round_binary(alpha):
    """Hard rounding of amplitudes to {0, 1} at the 1/2 threshold."""
    return np.where(np.asarray(alpha, dtype=float) >= 0.5, 1.0, 0.0)


def _canonical_phase(vec):
    """Rotate a vector so its largest entry is real nonnegative."""
    mags = np.abs(vec)
    if not np.any(mags > 0):
        return vec
    pivot = int(np.argmax(mags))
    return vec * np.exp(-1j * np.angle(vec[pivot]))


def _with_amplitudes(vec, amp):
    """Keep the phases of vec but impose entry magnitudes sqrt(amp)."""
    mags = np.abs(vec)
    phases = np.where(mags > 0, vec / np.where(mags > 0, mags, 1.0), 1.0)
    return np.sqrt(amp) * phases


def extract_rank_one(phi, objective_eval, num_randomizations, rng, amp_target=None):
    """Recover a TaRC vector from a (relaxed) PSD lifting.

    Candidates are the principal eigenvector scaled by sqrt(lambda_max)
    with entry magnitudes clipped to [0, 1], plus Gaussian randomizations
    drawn with covariance phi whose entry magnitudes are renormalized to
    the amplitude targets (the diagonal of phi by default, so that the
    two sides of the surface stay complementary per element). Returns
    the candidate maximizing objective_eval.
    """
    phi = np.asarray(phi, dtype=complex)
    m = phi.shape[0]
    if phi.shape != (m, m):
        raise ValueError("phi must be square")
    scale = max(1.0, float(np.max(np.abs(phi))) if phi.size else 1.0)
    if np.max(np.abs(phi - phi.conj().T)) > 1e-8 * scale:
        raise ValueError("phi is not Hermitian within tolerance")
    phi = 0.5 * (phi + phi.conj().T)
    eigvals, eigvecs = np.linalg.eigh(phi)
    if eigvals[0] < -1e-4 * max(1.0, eigvals[-1]):
        raise ValueError("phi is not PSD within tolerance")
    eigvals = np.clip(eigvals, 0.0, None)

    if amp_target is None:
        gauss_amp = np.clip(np.real(np.diag(phi)), 0.0, 1.0)
    else:
        gauss_amp = np.clip(np.asarray(amp_target, dtype=float), 0.0, 1.0)

    principal = _canonical_phase(np.sqrt(eigvals[-1]) * eigvecs[:, -1])
    if amp_target is None:
        clipped = np.minimum(np.abs(principal), 1.0)
        eig_candidate = _with_amplitudes(principal, clipped ** 2)
    else:
        eig_candidate = _with_amplitudes(principal, gauss_amp)

    candidates = [eig_candidate]
    root = eigvecs * np.sqrt(eigvals)[None, :]
    for _ in range(num_randomizations):
        z = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2.0)
        draw = root @ z
        candidates.append(_with_amplitudes(draw, gauss_amp))

    best = None
    best_value = -np.inf
    for cand in candidates:
        value = float(objective_eval(cand))
        if value > best_value:
            best = cand
            best_value = value
    return best
