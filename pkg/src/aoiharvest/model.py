"""Per-slot physics of the harvesting IoT downlink.

One slot of duration tau is split by the partitioning factor xi: the first
xi*tau harvests RF energy from every transmitter, the remaining (1-xi)*tau
carries the payload from the nearest transmitter. Everything here is a pure
function of one sampled realization plus the scalar configuration.

All internal quantities are SI (W, J, s, m); dB appears only at the CLI
boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InvalidConfigError(ValueError):
    """A parameter is outside the model's validity range."""


class NoInterfererError(ValueError):
    """SIR requested on a realization without interferers (conceptually infinite)."""


@dataclass(frozen=True)
class HarvesterModel:
    """Energy-conversion circuit.

    ``linear`` converts any input power; ``nonlinear`` needs the total received
    power to exceed the activation threshold ``pr_min`` and clips the usable
    input at the saturation threshold ``pr_max``. Both thresholds are fixed
    circuit constants (input powers, W).
    """

    kind: str = "linear"
    pr_min: float = 0.045
    pr_max: float = 10.0

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "nonlinear"):
            raise InvalidConfigError(f"harvester kind must be 'linear' or 'nonlinear', got {self.kind!r}")
        if self.kind == "nonlinear" and not 0.0 <= self.pr_min < self.pr_max:
            raise InvalidConfigError(f"need 0 <= pr_min < pr_max, got ({self.pr_min}, {self.pr_max})")


@dataclass(frozen=True)
class NetworkConfig:
    """Scalar parameters of the network model. Defaults are the reference settings."""

    density: float = 0.003      # transmitter density lambda (m^-2)
    radius: float = 60.0        # deployment disc radius R (m)
    alpha: float = 3.0          # path-loss exponent, > 2
    p_t: float = 10.0           # transmit power x path-loss constant (W)
    eta: float = 0.9            # energy-conversion efficiency, in (0, 1]
    xi: float = 0.4             # slot partitioning factor, in [0, 1)
    tau: float = 1.0            # slot duration (s)
    sigma_bits: float = 10.0    # payload size (bits)
    bandwidth: float = 1e4      # channel bandwidth B (Hz)
    e_th: float = 0.010         # energy threshold (J)
    p_a: float = 0.5            # packet arrival probability per slot, in (0, 1]
    harvester: HarvesterModel = field(default_factory=HarvesterModel)

    def __post_init__(self) -> None:
        checks = [
            (self.density > 0, "density must be > 0"),
            (self.radius > 0, "radius must be > 0"),
            (self.alpha > 2, "alpha must be > 2"),
            (self.p_t > 0, "p_t must be > 0"),
            (0 < self.eta <= 1, "eta must be in (0, 1]"),
            (0 <= self.xi < 1, "xi must be in [0, 1)"),
            (self.tau > 0, "tau must be > 0"),
            (self.sigma_bits >= 0, "sigma_bits must be >= 0"),
            (self.bandwidth > 0, "bandwidth must be > 0"),
            (self.e_th >= 0, "e_th must be >= 0"),
            (0 < self.p_a <= 1, "p_a must be in (0, 1]"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidConfigError(msg)


@dataclass(frozen=True)
class NetworkRealization:
    """One sampled draw of the disc process.

    ``distances`` are sorted ascending so index 0 is the serving (nearest)
    transmitter; ``gains`` are the matching unit-mean exponential fading draws.
    """

    distances: np.ndarray
    gains: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.distances, dtype=float)
        g = np.asarray(self.gains, dtype=float)
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "gains", g)
        if d.ndim != 1 or g.shape != d.shape or d.size < 1:
            raise InvalidConfigError("distances and gains must be 1-D arrays of equal positive length")
        if not (np.all(d > 0) and np.all(np.diff(d) >= 0)):
            raise InvalidConfigError("distances must be positive and sorted ascending")
        if not np.all(g > 0):
            raise InvalidConfigError("gains must be strictly positive")

    @property
    def count(self) -> int:
        """Number of transmitters (serving link included)."""
        return int(self.distances.size)


def received_power(realization: NetworkRealization, cfg: NetworkConfig) -> float:
    """Total received power P_t * sum_k g_k d_k^-alpha over every transmitter (W)."""
    w = realization.distances ** -cfg.alpha
    return cfg.p_t * float(np.dot(realization.gains, w))


def harvested_energy(realization: NetworkRealization, cfg: NetworkConfig) -> float:
    """Energy captured during the harvesting phase of one slot (J).

    Linear circuit: eta * xi * tau * Pr. Nonlinear circuit: 0 below the
    activation threshold, the linear value inside the operating band, and
    eta * xi * tau * pr_max once saturated.
    """
    pr = received_power(realization, cfg)
    linear = cfg.eta * cfg.xi * cfg.tau * pr
    h = cfg.harvester
    if h.kind == "linear":
        return linear
    if pr < h.pr_min:
        return 0.0
    if pr > h.pr_max:
        return cfg.eta * cfg.xi * cfg.tau * h.pr_max
    return linear


def sir(realization: NetworkRealization, cfg: NetworkConfig) -> float:
    """Signal-to-interference ratio at the typical device (dimensionless).

    The transmit power appears in both numerator and denominator and cancels.
    """
    if realization.count < 2:
        raise NoInterfererError("SIR needs at least one interferer")
    w = realization.distances ** -cfg.alpha
    signal = realization.gains[0] * w[0]
    interference = float(np.dot(realization.gains[1:], w[1:]))
    return float(signal / interference)


def sir_threshold(cfg: NetworkConfig) -> float:
    """Decoding threshold beta = 2**(r/B) - 1 with rate r = sigma/((1-xi)*tau).

    Strictly increasing in xi (shorter data phase needs a higher rate) and
    diverging as xi -> 1.
    """
    if cfg.xi >= 1:
        raise InvalidConfigError("xi must be < 1 for a nonzero data phase")
    rate = cfg.sigma_bits / ((1.0 - cfg.xi) * cfg.tau)
    exponent = rate / cfg.bandwidth
    if exponent >= 1024.0:  # past the double range; the threshold is effectively infinite
        return math.inf
    return 2.0 ** exponent - 1.0


def energy_activation_power(cfg: NetworkConfig) -> float:
    """Received power at which the linear harvest exactly meets e_th (W)."""
    if cfg.xi == 0:
        return math.inf
    return cfg.e_th / (cfg.eta * cfg.xi * cfg.tau)


def db_to_watt(db: float) -> float:
    return 10.0 ** (db / 10.0)


def watt_to_db(watt: float) -> float:
    if watt <= 0:
        raise InvalidConfigError("power must be > 0 to express in dB")
    return 10.0 * math.log10(watt)
