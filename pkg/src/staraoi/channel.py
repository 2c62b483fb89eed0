"""Geometry-driven random channels and link-budget evaluation.

Every link is a cascaded path through the surface: BS -> RIS -> user.
Channel entries carry geometric path loss on the magnitude and an i.i.d.
uniform phase, redrawn independently each slot (block fading).
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class Pair(NamedTuple):
    """Per-stream container indexed by side: t (transmission) and r (reflection)."""

    t: object
    r: object


SIDES = ("t", "r")


def path_loss(d, alpha):
    """Geometric power gain (1/d)^alpha for a link of length d meters."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return (1.0 / d) ** alpha


@dataclass
class Geometry:
    """2-D node placement and per-class path-loss exponents.

    Users tagged t must lie strictly above the horizontal line through the
    RIS (transmission half-plane), users tagged r strictly below it.
    """

    bs_pos: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0]))
    ris_pos: np.ndarray = field(default_factory=lambda: np.array([8.0, 0.0]))
    eu_r_pos: np.ndarray = field(default_factory=lambda: np.array([10.0, -2.0]))
    iu_r_pos: np.ndarray = field(default_factory=lambda: np.array([12.0, -2.0]))
    eu_t_pos: np.ndarray = field(default_factory=lambda: np.array([10.0, 2.0]))
    iu_t_pos: np.ndarray = field(default_factory=lambda: np.array([12.0, 2.0]))
    exponent_info: float = 2.2
    exponent_energy: float = 2.0

    def __post_init__(self):
        for name in ("bs_pos", "ris_pos", "eu_r_pos", "iu_r_pos", "eu_t_pos", "iu_t_pos"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
            if getattr(self, name).shape != (2,):
                raise ValueError(f"{name} must be a 2-D coordinate")
        if self.exponent_info < 0 or self.exponent_energy < 0:
            raise ValueError("path-loss exponents must be nonnegative")
        ris_y = self.ris_pos[1]
        for name in ("eu_t_pos", "iu_t_pos"):
            if getattr(self, name)[1] <= ris_y:
                raise ValueError(f"{name} must lie in the transmission half-plane")
        for name in ("eu_r_pos", "iu_r_pos"):
            if getattr(self, name)[1] >= ris_y:
                raise ValueError(f"{name} must lie in the reflection half-plane")
        for name, d in self.link_distances().items():
            if d <= 0:
                raise ValueError(f"link distance {name} must be positive")

    def link_distances(self):
        """Distances of the five modeled links."""
        dist = lambda a, b: float(np.linalg.norm(a - b))
        return {
            "bs_ris": dist(self.bs_pos, self.ris_pos),
            "ris_iu_t": dist(self.ris_pos, self.iu_t_pos),
            "ris_iu_r": dist(self.ris_pos, self.iu_r_pos),
            "ris_eu_t": dist(self.ris_pos, self.eu_t_pos),
            "ris_eu_r": dist(self.ris_pos, self.eu_r_pos),
        }


def default_geometry():
    """Reference layout: BS (0,0), RIS (8,0), EUs at x=10, IUs at x=12, y = +/-2."""
    return Geometry()


@dataclass
class ChannelSet:
    """One slot's channel realization plus noise variances.

    g is the BS->RIS matrix (M x N_t); f_t/f_r are RIS->IU vectors and
    u_t/u_r are RIS->EU vectors, all length M. sigma2_energy is carried for
    completeness but never enters the harvested-energy expression.
    """

    g: np.ndarray
    f_t: np.ndarray
    f_r: np.ndarray
    u_t: np.ndarray
    u_r: np.ndarray
    sigma2_info: Pair
    sigma2_energy: Pair

    def __post_init__(self):
        m, n_t = self.g.shape
        for name in ("f_t", "f_r", "u_t", "u_r"):
            if getattr(self, name).shape != (m,):
                raise ValueError(f"{name} must have length M={m}")
        if min(self.sigma2_info) <= 0 or min(self.sigma2_energy) <= 0:
            raise ValueError("noise variances must be positive")

    @property
    def m(self):
        return self.g.shape[0]

    @property
    def n_t(self):
        return self.g.shape[1]


def _as_pair(x):
    if isinstance(x, Pair):
        return x
    if np.isscalar(x):
        return Pair(float(x), float(x))
    t, r = x
    return Pair(float(t), float(r))


def sample_channel_set(geom, m, n_t, rng, sigma2_info=1.0, sigma2_energy=1.0):
    """Draw one block-fading realization for all five links.

    Entry magnitudes are sqrt(path_loss(d, alpha)) with i.i.d. phases uniform
    on [0, 2pi). Information-user links and the BS->RIS link use
    geom.exponent_info; energy-user links use geom.exponent_energy. Draw
    order is fixed (g, f_t, f_r, u_t, u_r) so equal seeds give bitwise-equal
    channels.
    """
    if m < 1 or n_t < 1:
        raise ValueError("m and n_t must be at least 1")
    d = geom.link_distances()

    def draw(amplitude, shape):
        phase = rng.uniform(0.0, 2.0 * np.pi, size=shape)
        return amplitude * np.exp(1j * phase)

    g = draw(np.sqrt(path_loss(d["bs_ris"], geom.exponent_info)), (m, n_t))
    f_t = draw(np.sqrt(path_loss(d["ris_iu_t"], geom.exponent_info)), m)
    f_r = draw(np.sqrt(path_loss(d["ris_iu_r"], geom.exponent_info)), m)
    u_t = draw(np.sqrt(path_loss(d["ris_eu_t"], geom.exponent_energy)), m)
    u_r = draw(np.sqrt(path_loss(d["ris_eu_r"], geom.exponent_energy)), m)
    return ChannelSet(g, f_t, f_r, u_t, u_r,
                      _as_pair(sigma2_info), _as_pair(sigma2_energy))


def cascade(side_channel, g):
    """diag(conj(side_channel)) @ g, the per-element cascaded matrix."""
    side_channel = np.asarray(side_channel)
    g = np.asarray(g)
    if side_channel.ndim != 1 or g.ndim != 2 or g.shape[0] != side_channel.shape[0]:
        raise ValueError("cascade needs a length-M vector and an M x N_t matrix")
    return np.conj(side_channel)[:, None] * g


def snr(f, tarc_vec, g, w, sigma2):
    """|f^H diag(tarc_vec) g w|^2 / sigma2; diag(tarc_vec) realizes the surface response."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    received = np.vdot(f, np.asarray(tarc_vec) * (np.asarray(g) @ np.asarray(w)))
    return float(np.abs(received) ** 2 / sigma2)


def harvested_energy(u, tarc_vec, g, v):
    """|u^H diag(tarc_vec) g v|^2 with receiver noise neglected."""
    received = np.vdot(u, np.asarray(tarc_vec) * (np.asarray(g) @ np.asarray(v)))
    return float(np.abs(received) ** 2)
