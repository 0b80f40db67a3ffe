"""Slot-level age-of-information process over a Geo/Geo/1 link.

Bernoulli(p_a) arrivals, i.i.d. per-slot delivery probability mu (the JSP of
the link). Non-preemptive service drops arrivals while a packet is in
service; preemptive service replaces the in-service packet on arrival.

Slot convention: the in-service packet's transmission attempt is evaluated
first, then the slot's arrival is processed. An arrival is admitted when the
server ends the slot empty (it was idle, or the attempt just succeeded) and,
under preemption, when the attempt just failed (it replaces the in-service
packet). Every admitted packet is first attempted in the following slot, and
ages count attempt slots. Under this convention the service span W is
Geom(mu) on {1,2,...}, the delivered packet's own attempt count W_hat is
Geom(q_s) with q_s = mu + p_a(1-mu), the admission gap V has
P[V=n] = p_a(1-p_a)^n, and the mean peak age matches the closed forms as
exact expectations.

The per-slot AoI export is the staircase value just before any delivery reset
(so its local maxima are the peak-age samples); at a delivery the internal
age resets to the delivered packet's attempt-slot age.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QueueParams",
    "QueueTrace",
    "PaoiStats",
    "simulate_queue",
    "paoi_np_closed_form",
    "paoi_p_closed_form",
    "residual_pmf",
    "InfiniteAgeError",
]

DISCIPLINES = ("non_preemptive", "preemptive")


class InfiniteAgeError(ValueError):
    """Closed form requested with zero success or arrival probability."""


@dataclass(frozen=True)
class QueueParams:
    p_a: float
    mu: float
    discipline: str = "non_preemptive"
    n_slots: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.p_a <= 1:
            raise ValueError("p_a must be in (0, 1]")
        if not 0 < self.mu <= 1:
            raise ValueError("mu must be in (0, 1]")
        if self.discipline not in DISCIPLINES:
            raise ValueError(f"discipline must be one of {DISCIPLINES}")
        if self.n_slots < 1:
            raise ValueError("n_slots must be >= 1")


@dataclass(frozen=True)
class QueueTrace:
    aoi_path: np.ndarray            # pre-reset staircase value per slot
    paoi_samples: np.ndarray        # peak age at each delivery
    delivery_slots: np.ndarray      # 1-based slot index of each delivery
    service_times: np.ndarray       # W_i, attempt span of each delivered generation
    residuals: np.ndarray           # W_hat_i, attempts of the delivered packet itself
    interarrivals: np.ndarray       # V_i, idle slots before each generation
    replacement_counts: np.ndarray  # N_i, replacements within each generation


@dataclass(frozen=True)
class PaoiStats:
    mean_paoi: float
    ci_halfwidth: float
    count: int
    mean_service: float
    mean_residual: float


def _batch_ci_halfwidth(samples: np.ndarray) -> float:
    """95% halfwidth via batch means (peak-age samples are autocorrelated)."""
    n = samples.size
    if n < 2:
        return math.inf
    n_batches = min(64, n // 2)
    if n_batches < 2:
        return 1.959963984540054 * float(samples.std(ddof=1)) / math.sqrt(n)
    usable = (n // n_batches) * n_batches
    means = samples[:usable].reshape(n_batches, -1).mean(axis=1)
    return 1.959963984540054 * float(means.std(ddof=1)) / math.sqrt(n_batches)


def simulate_queue(params: QueueParams, record_path: bool = True) -> tuple[QueueTrace, PaoiStats]:
    """Run the slot recursion and aggregate peak-age statistics.

    The peak age at each delivery is recorded twice: from the aging staircase
    and from the tracked components (previous residual + idle gap + service
    span); a mismatch raises, as a structural self-check of the accounting.
    """
    rng = np.random.default_rng(params.seed)
    n = params.n_slots
    # Index 0 is the warm-up arrival draw for the phantom delivery at slot 0.
    arrivals = (rng.random(n + 1) < params.p_a).tolist()
    successes = (rng.random(n) < params.mu).tolist()
    preemptive = params.discipline == "preemptive"

    aoi_path = [] if record_path else None
    peaks: list[int] = []
    delivery_slots: list[int] = []
    service_times: list[int] = []
    residuals: list[int] = []
    interarrivals: list[int] = []
    replacement_counts: list[int] = []

    busy = bool(arrivals[0])
    attempts_gen = 0     # attempt slots of the current generation (W so far)
    attempts_cur = 0     # attempt slots of the current in-service packet (W_hat so far)
    replacements = 0
    pending_v = 0        # admission slot minus previous delivery slot (V of the generation)
    last_delivery = 0    # phantom delivery at slot 0
    aoi = 1              # staircase value after the last reset (phantom age)
    prev_residual = 1    # residual of the phantom packet

    for s in range(1, n + 1):
        aoi_pre = aoi + 1
        if busy:
            attempts_gen += 1
            attempts_cur += 1
            if successes[s - 1]:
                peak = prev_residual + pending_v + attempts_gen
                if peak != aoi_pre:
                    raise RuntimeError("AoI accounting mismatch between staircase and components")
                peaks.append(peak)
                delivery_slots.append(s)
                service_times.append(attempts_gen)
                residuals.append(attempts_cur)
                interarrivals.append(pending_v)
                replacement_counts.append(replacements)
                prev_residual = attempts_cur
                aoi = attempts_cur
                busy = False
                last_delivery = s
            else:
                aoi = aoi_pre
        else:
            aoi = aoi_pre
        # Slot-end arrival processing: the attempt above always precedes it.
        if arrivals[s]:
            if not busy:
                busy = True
                attempts_gen = attempts_cur = replacements = 0
                pending_v = s - last_delivery
            elif preemptive:
                attempts_cur = 0
                replacements += 1
            # non-preemptive and busy: dropped
        if record_path:
            aoi_path.append(aoi_pre)

    peaks_arr = np.asarray(peaks, dtype=np.int64)
    w_arr = np.asarray(service_times, dtype=np.int64)
    trace = QueueTrace(
        aoi_path=np.asarray(aoi_path if record_path else [], dtype=np.int64),
        paoi_samples=peaks_arr,
        delivery_slots=np.asarray(delivery_slots, dtype=np.int64),
        service_times=w_arr,
        residuals=np.asarray(residuals, dtype=np.int64),
        interarrivals=np.asarray(interarrivals, dtype=np.int64),
        replacement_counts=np.asarray(replacement_counts, dtype=np.int64),
    )
    count = peaks_arr.size
    stats = PaoiStats(
        mean_paoi=float(peaks_arr.mean()) if count else math.nan,
        ci_halfwidth=_batch_ci_halfwidth(peaks_arr) if count else math.inf,
        count=count,
        mean_service=float(w_arr.mean()) if count else math.nan,
        mean_residual=float(trace.residuals.mean()) if count else math.nan,
    )
    return trace, stats


def _check_rates(mu: float, p_a: float) -> None:
    if mu == 0 or p_a == 0:
        raise InfiniteAgeError("mean peak age diverges at mu = 0 or p_a = 0")
    if not (0 < mu <= 1 and 0 < p_a <= 1):
        raise ValueError("mu and p_a must be in (0, 1]")


def paoi_np_closed_form(mu: float, p_a: float) -> float:
    """Mean peak age under non-preemptive service: (1/p_a - 1) + 2/mu slots."""
    _check_rates(mu, p_a)
    return (1.0 / p_a - 1.0) + 2.0 / mu


def paoi_p_closed_form(mu: float, p_a: float) -> float:
    """Mean peak age under preemptive service: (1/p_a - 1) + 1/mu + 1/q_s slots,
    with q_s = mu + p_a (1 - mu)."""
    _check_rates(mu, p_a)
    q_s = mu + p_a * (1.0 - mu)
    return (1.0 / p_a - 1.0) + 1.0 / mu + 1.0 / q_s


def residual_pmf(m, mu: float, p_a: float):
    """P[W_hat = m] = q_s (1 - q_s)^{m-1} for m >= 1 (delivered-packet attempts)."""
    _check_rates(mu, p_a)
    m_arr = np.asarray(m)
    if np.any(m_arr < 1) or not np.issubdtype(m_arr.dtype, np.integer):
        raise ValueError("m must be an integer >= 1")
    q_s = mu + p_a * (1.0 - mu)
    out = q_s * (1.0 - q_s) ** (m_arr - 1)
    return float(out) if out.ndim == 0 else out
