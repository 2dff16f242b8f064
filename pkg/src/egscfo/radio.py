"""Radio energy accounting and the two-state channel-quality model.

Transmission follows the first-order radio model: free-space (d^2)
attenuation below the crossover distance, two-ray ground (d^4) above it.
Overhearing a neighbour's transmission has its own budget: a running
monitoring rate plus a per-bit receive surcharge once a packet is
actually caught.

All parameters and results are in SI units (joules, metres, seconds);
the nano/pico scale factors of typical hardware tables are applied when
a config file is read, never inside the formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class RadioParams:
    """Energy constants of the radio and monitoring hardware.

    e_elec: J/bit spent by transmitter or receiver circuitry.
    eps_fs: J/bit/m^2 free-space amplifier constant.
    eps_amp: J/bit/m^4 two-ray amplifier constant.
    e_da: J/bit data-aggregation cost on reception.
    e_h: J/bit surcharge for overhearing a caught packet.
    e_m: J/s cost of keeping the monitor running.
    d_max_overhear: s, the longest a node waits for a packet to appear.
    """

    e_elec: float = 50e-9
    eps_fs: float = 10e-12
    eps_amp: float = 0.0013e-12
    e_da: float = 5e-9
    e_h: float = 5e-9
    e_m: float = 10e-9
    d_max_overhear: float = 10.0

    def __post_init__(self):
        for name in ("e_elec", "eps_fs", "eps_amp", "e_da", "e_h", "e_m",
                     "d_max_overhear"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"radio parameter {name} must be positive")

    @property
    def crossover_distance(self) -> float:
        """Distance where the two amplifier models dissipate equally."""
        return math.sqrt(self.eps_fs / self.eps_amp)

    def tx_energy(self, bits: float, distance: float) -> float:
        """Energy to transmit ``bits`` over ``distance`` metres."""
        if bits < 0 or distance < 0:
            raise ValueError("bits and distance must be non-negative")
        if distance < self.crossover_distance:
            amp = self.eps_fs * distance ** 2
        else:
            amp = self.eps_amp * distance ** 4
        return bits * self.e_elec + bits * amp

    def rx_energy(self, bits: float) -> float:
        """Energy to receive and aggregate ``bits``."""
        if bits < 0:
            raise ValueError("bits must be non-negative")
        return bits * (self.e_elec + self.e_da)

    def monitor_energy(self, overhear_duration: float | None, bits: float) -> float:
        """Energy to watch for one packet of ``bits``.

        ``overhear_duration`` is the wait until the packet appeared, or
        None when nothing was caught (the monitor then runs for the full
        window).
        """
        if overhear_duration is None:
            return self.d_max_overhear * self.e_m
        if overhear_duration < 0.0:
            raise ValueError("overhear duration must be non-negative")
        if overhear_duration > self.d_max_overhear:
            raise ValueError("overhear duration exceeds the monitoring window")
        return overhear_duration * self.e_m + bits * self.e_h


@dataclass(frozen=True)
class ChannelModel:
    """Two-state (bad/good) channel with exponential holding times.

    alpha_bad and alpha_good are the transition rates into the bad and
    good states; their ratio fixes the stationary distribution.
    """

    alpha_bad: float = 3.0
    alpha_good: float = 7.0

    def __post_init__(self):
        if self.alpha_bad <= 0.0 or self.alpha_good <= 0.0:
            raise ValueError("channel rates must be positive")

    @property
    def p_bad(self) -> float:
        return self.alpha_bad / (self.alpha_bad + self.alpha_good)

    @property
    def p_good(self) -> float:
        return self.alpha_good / (self.alpha_bad + self.alpha_good)

    def sample(self, rng) -> tuple[str, float]:
        """Draw a channel state from the stationary law plus its holding time.

        The holding time is diagnostic only; per-transmission behaviour
        depends on the state alone.
        """
        if rng.random() < self.p_bad:
            state, rate = "bad", self.alpha_bad
        else:
            state, rate = "good", self.alpha_good
        return state, rng.exponential(1.0 / rate)
