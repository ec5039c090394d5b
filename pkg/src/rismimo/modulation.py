"""Constant-envelope harmonic modulation.

A unit cell sweeps its reflection phase linearly by ``delta_phi`` over one
symbol period ``Ts`` and starts the sweep at a circular time offset ``t0``.
The resulting periodic waveform has a Fourier series whose ``l``-th harmonic

    a_l = sinc(delta_phi/2 - l*pi) * exp(j*(delta_phi/2 - l*pi)) * exp(-j*l*2*pi*t0/Ts)

has an amplitude set by ``delta_phi`` and a phase set by ``t0``.  QAM is
therefore possible on a harmonic even though every sample of the waveform
has unit magnitude.  ``sinc`` is unnormalized throughout: ``sin(x)/x``.

A DAC with ``q`` updates per symbol turns the ramp into a ``q``-step
staircase; its harmonics differ from the ideal ones by a closed-form factor
(:func:`discretization_ratio`).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import (
    ConvergenceError,
    DomainError,
    LengthError,
    UndefinedRatioError,
    UnreachableTargetError,
)
from .ris_core import TWO_PI, AmplitudePhaseProfile, circular_distance, wrap_phase

PI = np.pi


def sinc(x):
    """Unnormalized sinc, ``sin(x)/x`` with ``sinc(0) = 1``."""
    return np.sinc(np.asarray(x, dtype=float) / PI)


@dataclass(frozen=True)
class SymbolParams:
    """One constant-envelope symbol.

    Attributes
    ----------
    t0 : float
        Circular time shift in seconds, ``0 <= t0 < ts``.
    delta_phi : float
        Phase swept over one symbol, radians.
    ts : float
        Symbol period in seconds.
    q : int or None
        Number of DAC steps per symbol; ``None`` is a continuous ramp.
    """

    t0: float
    delta_phi: float
    ts: float = 1.0
    q: int | None = None

    def __post_init__(self):
        if self.ts <= 0:
            raise DomainError("symbol period must be positive")
        if not 0.0 <= self.t0 < self.ts:
            raise DomainError(f"t0 must lie in [0, Ts), got {self.t0}")
        if self.delta_phi < 0:
            raise DomainError("delta_phi must be non-negative")
        if self.q is not None and (int(self.q) != self.q or self.q < 1):
            raise DomainError("q must be a positive integer or None")

    @property
    def t0_frac(self) -> float:
        return self.t0 / self.ts

    def with_q(self, q: int | None) -> "SymbolParams":
        return SymbolParams(self.t0, self.delta_phi, self.ts, q)


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_period: float

    @property
    def duration(self) -> float:
        return len(self.samples) * self.sample_period


# ---------------------------------------------------------------------------
# Vectorized closed forms.  ``t0_frac`` is t0/Ts.

def ramp_coefficient(t0_frac, delta_phi, l):
    """Harmonic ``a_l`` of the continuous ramp, from the amplitude/phase form.

    The phase carries the sign of the sinc through a floor-parity term and a
    step term; ``mod`` is non-negative and the step is 0 at 0.  When
    ``delta_phi == 2*l*pi`` the coefficient is exactly ``exp(-j*l*2*pi*t0)``.
    """
    t0_frac, delta_phi, l = np.broadcast_arrays(
        np.asarray(t0_frac, dtype=float), np.asarray(delta_phi, dtype=float), np.asarray(l)
    )
    x = delta_phi / 2.0 - l * PI
    amp = np.abs(sinc(x))
    parity = np.mod(np.floor(delta_phi / TWO_PI - l), 2.0)
    step = (2.0 * l * PI - delta_phi > 0).astype(float)
    phase = -l * TWO_PI * t0_frac + x + parity * PI + step * PI
    on_harmonic = x == 0
    amp = np.where(on_harmonic, 1.0, amp)
    phase = np.where(on_harmonic, -l * TWO_PI * t0_frac, phase)
    out = amp * np.exp(1j * wrap_phase(phase))
    return out[()] if out.ndim == 0 else out


def _dirichlet_ratio(x, q):
    """``sinc(x) / sinc(x/q)`` with its removable singularities filled in."""
    x = np.asarray(x, dtype=float)
    s = np.sin(x / q)
    singular = np.abs(s) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        regular = sinc(x) / sinc(x / q)
        limit = np.cos(x) / np.cos(x / q)
    return np.where(singular & (x != 0), limit, regular)


def staircase_coefficient(t0_frac, delta_phi, l, q):
    """Harmonic of the ``q``-step staircase, delayed circularly by ``t0``."""
    t0_frac, delta_phi, l, q = np.broadcast_arrays(
        np.asarray(t0_frac, dtype=float),
        np.asarray(delta_phi, dtype=float),
        np.asarray(l),
        np.asarray(q),
    )
    x = delta_phi / 2.0 - l * PI
    mag = sinc(l * PI / q) * _dirichlet_ratio(x, q)
    out = mag * np.exp(1j * (x - delta_phi / (2.0 * q) - l * TWO_PI * t0_frac))
    return out[()] if out.ndim == 0 else out


def symbol_coefficient(t0_frac, delta_phi, l=1, q=None):
    """Harmonic of a symbol as transmitted: continuous ramp or staircase."""
    if q is None:
        return ramp_coefficient(t0_frac, delta_phi, l)
    return staircase_coefficient(t0_frac, delta_phi, l, q)


# ---------------------------------------------------------------------------
# Waveforms

def evaluate_symbol(params: SymbolParams, t):
    """Ideal (continuous-ramp) waveform at arbitrary times ``t`` in ``[0, Ts]``."""
    u = np.asarray(t, dtype=float) / params.ts
    t0 = params.t0_frac
    ramp = np.where(u <= t0, u + 1.0 - t0, u - t0)
    return np.exp(1j * params.delta_phi * ramp)


def ideal_waveform(params: SymbolParams, samples_per_symbol: int) -> Waveform:
    """Sample the continuous phase ramp at ``t = i*Ts/n``, ``i = 0..n-1``."""
    if params.q is not None:
        raise DomainError("ideal_waveform needs q = None; use discrete_waveform")
    if samples_per_symbol < 2:
        raise DomainError("need at least 2 samples per symbol")
    t = np.arange(samples_per_symbol) * params.ts / samples_per_symbol
    return Waveform(evaluate_symbol(params, t), params.ts / samples_per_symbol)


def discrete_waveform(params: SymbolParams) -> Waveform:
    """The ``q`` hold values of the staircase, one per DAC step.

    Step ``p`` holds ``exp(j*delta_phi*p/q)``; a shift ``t0`` must be a whole
    number of steps and rotates the steps circularly.
    """
    q = params.q
    if q is None:
        raise DomainError("discrete_waveform needs a finite q")
    k_float = params.t0_frac * q
    k = int(round(k_float))
    if abs(k_float - k) > 1e-9:
        raise DomainError(f"t0 = {params.t0} is not a multiple of Ts/q at q = {q}")
    steps = np.exp(1j * params.delta_phi * np.arange(q) / q)
    return Waveform(np.roll(steps, k % q), params.ts / q)


# ---------------------------------------------------------------------------
# Harmonic coefficients

def harmonic_coefficient(params: SymbolParams, l: int) -> complex:
    """Fourier coefficient ``a_l`` of the continuous-ramp symbol."""
    if params.q is not None:
        raise DomainError("harmonic_coefficient needs q = None; use discrete_harmonic_coefficient")
    return complex(ramp_coefficient(params.t0_frac, params.delta_phi, l))


def discrete_harmonic_coefficient(params: SymbolParams, l: int) -> complex:
    """Fourier coefficient of the ``q``-step staircase version of the symbol."""
    if params.q is None:
        raise DomainError("discrete_harmonic_coefficient needs a finite q")
    if l == 0:
        raise DomainError("the staircase closed form is undefined for l = 0")
    return complex(staircase_coefficient(params.t0_frac, params.delta_phi, l, params.q))


def discretization_ratio(params: SymbolParams, l: int) -> complex:
    """Ratio of the staircase harmonic to the ideal one at the same settings.

    Equals ``sinc(l*pi/q) / sinc((delta_phi/2 - l*pi)/q) * exp(-j*delta_phi/(2q))``
    and is independent of ``t0``.
    """
    q = params.q
    if q is None:
        raise DomainError("discretization_ratio needs a finite q")
    if l == 0:
        raise DomainError("the staircase closed form is undefined for l = 0")
    x = params.delta_phi / 2.0 - l * PI
    if x != 0 and abs(sinc(x)) < 1e-14:
        raise UndefinedRatioError(f"a_{l} vanishes at delta_phi = {params.delta_phi}")
    ratio = sinc(l * PI / q) / sinc(x / q)
    return complex(ratio * np.exp(-1j * params.delta_phi / (2.0 * q)))


# ---------------------------------------------------------------------------
# 16-QAM mapping on the first harmonic

@dataclass(frozen=True)
class QamMapEntry:
    symbol_index: int
    bits: str
    amp: float
    phase: float
    t0_frac: float
    delta_phi: float

    @property
    def point(self) -> complex:
        """Ideal first-harmonic value ``amp * exp(j*phase)``."""
        return self.amp * complex(np.exp(1j * self.phase))

    def params(self, ts: float = 1.0, q: int | None = None) -> SymbolParams:
        return SymbolParams(self.t0_frac * ts, self.delta_phi, ts, q)


_OUTER, _MID, _INNER = 1.0, math.sqrt(5.0 / 9.0), 1.0 / 3.0
_ATAN3 = math.atan(1.0 / 3.0)
_DPHI_OUTER, _DPHI_MID, _DPHI_INNER = 2.0 * PI, 1.180 * PI, 0.549 * PI

QAM16_TABLE: tuple[QamMapEntry, ...] = tuple(
    QamMapEntry(i, format(i, "04b"), amp, phase, t0, dphi)
    for i, (amp, phase, t0, dphi) in enumerate(
        [
            (_OUTER, 5 / 4 * PI, 0.375, _DPHI_OUTER),
            (_MID, 3 / 2 * PI - _ATAN3, 0.0962, _DPHI_MID),
            (_OUTER, 7 / 4 * PI, 0.125, _DPHI_OUTER),
            (_MID, 3 / 2 * PI + _ATAN3, 0.994, _DPHI_MID),
            (_MID, PI + _ATAN3, 0.244, _DPHI_MID),
            (_INNER, 5 / 4 * PI, 0.0123, _DPHI_INNER),
            (_MID, 2 * PI - _ATAN3, 0.846, _DPHI_MID),
            (_INNER, 7 / 4 * PI, 0.762, _DPHI_INNER),
            (_OUTER, 3 / 4 * PI, 0.625, _DPHI_OUTER),
            (_MID, 1 / 2 * PI + _ATAN3, 0.494, _DPHI_MID),
            (_OUTER, 1 / 4 * PI, 0.875, _DPHI_OUTER),
            (_MID, 1 / 2 * PI - _ATAN3, 0.596, _DPHI_MID),
            (_MID, PI - _ATAN3, 0.346, _DPHI_MID),
            (_INNER, 3 / 4 * PI, 0.262, _DPHI_INNER),
            (_MID, _ATAN3, 0.744, _DPHI_MID),
            (_INNER, 1 / 4 * PI, 0.512, _DPHI_INNER),
        ]
    )
)


def _bits_to_index(bits) -> int:
    if isinstance(bits, str):
        s = bits.strip()
    else:
        s = "".join(str(int(b)) for b in bits)
    if len(s) != 4 or set(s) - {"0", "1"}:
        raise LengthError(f"expected exactly 4 bits, got {bits!r}")
    return int(s, 2)


def map_bits_16qam(bits) -> QamMapEntry:
    """Look up the mapping row for a 4-bit group (``'0010'`` or ``[0, 0, 1, 0]``)."""
    return QAM16_TABLE[_bits_to_index(bits)]


def constellation_points(table: Sequence[QamMapEntry] = QAM16_TABLE, normalize: bool = False) -> np.ndarray:
    """Ideal points of ``table``; optionally scaled to unit mean energy."""
    pts = np.array([e.point for e in table])
    if normalize:
        pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    return pts


def nearest_index(raw, points, tie_tol: float = 1e-12):
    """Index of the nearest point for each raw value; ties go to the lowest index."""
    raw = np.asarray(raw, dtype=complex)
    d = np.abs(raw[..., None] - points)
    dmin = d.min(axis=-1, keepdims=True)
    return np.argmax(d <= dmin + tie_tol * np.maximum(1.0, dmin), axis=-1)


def demap_symbol(raw: complex, constellation: Sequence[QamMapEntry] = QAM16_TABLE) -> str:
    """Bits of the constellation entry closest (Euclidean) to ``raw``."""
    if len(constellation) == 0:
        raise DomainError("empty constellation")
    idx = int(nearest_index(raw, constellation_points(constellation)))
    return constellation[idx].bits


# ---------------------------------------------------------------------------
# Phase-dependent amplitude: quadrature and mapping solver

def _simpson(y, h):
    return h / 3.0 * (y[..., 0] + y[..., -1] + 4.0 * y[..., 1:-1:2].sum(-1) + 2.0 * y[..., 2:-1:2].sum(-1))


def profile_harmonic(
    profile: AmplitudePhaseProfile, params: SymbolParams, l: int = 1, panels: int = 4096
) -> complex:
    """``a_l`` of the amplitude-scaled ramp by composite Simpson quadrature.

    The circularly shifted waveform is integrated directly.  The period is
    split at ``t0`` and wherever the phase crosses a profile breakpoint, and
    each smooth piece gets ``panels`` panels.
    """
    if panels < 2 or panels % 2:
        raise DomainError("Simpson needs an even number of panels")
    dphi, t0 = params.delta_phi, params.t0_frac
    # normalized times where the phase ramp hits a kink of A
    cuts = [0.0, t0, 1.0]
    if dphi > 0:
        for b in profile.breakpoints:
            if 0.0 < b < dphi:
                cuts.append((t0 + b / dphi) % 1.0)
    cuts = np.unique(np.clip(cuts, 0.0, 1.0))
    total = 0j
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0:
            continue
        u = np.linspace(lo, hi, panels + 1)
        mid = 0.5 * (lo + hi)
        ramp = u + 1.0 - t0 if mid <= t0 else u - t0
        phi = dphi * ramp
        amp = profile(np.clip(phi, 0.0, TWO_PI))
        y = amp * np.exp(1j * (phi - l * TWO_PI * u))
        total += _simpson(y, (hi - lo) / panels)
    return complex(total)


def max_harmonic_amplitude(profile: AmplitudePhaseProfile, l: int = 1, panels: int = 4096) -> float:
    """Largest ``|a_l|`` reachable with ``delta_phi`` in ``(0, 2*pi]``.

    For a positive amplitude profile and ``l = 1`` this is the full-turn sweep.
    """
    return abs(profile_harmonic(profile, SymbolParams(0.0, TWO_PI), l, panels))


def solve_mapping(
    profile: AmplitudePhaseProfile,
    target_amp: float,
    target_phase: float,
    l: int = 1,
    panels: int = 4096,
    maxiter: int = 200,
    tol: float = 1e-4,
) -> SymbolParams:
    """Find ``(t0, delta_phi)`` whose ``l``-th harmonic hits a target point.

    ``delta_phi`` comes from bisection of ``|a_l|`` over ``(0, 2*pi]`` with
    ``t0 = 0``; ``t0`` then rotates the phase via the time-delay property.
    The result is re-checked by quadrature of the shifted waveform and must
    reproduce the target within ``tol`` in amplitude and circular phase.
    """
    if l < 1:
        raise DomainError("solve_mapping needs l >= 1")
    if target_amp <= 0:
        raise DomainError("target amplitude must be positive")

    def amp_at(dphi):
        return abs(profile_harmonic(profile, SymbolParams(0.0, dphi), l, panels))

    a_max = amp_at(TWO_PI)
    if target_amp > a_max * (1 + 1e-12):
        raise UnreachableTargetError(f"target {target_amp:.6g} exceeds the maximum {a_max:.6g}")

    if abs(target_amp - a_max) <= 1e-12 * a_max:
        dphi = TWO_PI
    else:
        lo, hi = 1e-12, TWO_PI
        f_lo, f_hi = amp_at(lo) - target_amp, a_max - target_amp
        if not (f_lo < 0 < f_hi):
            raise ConvergenceError("root is not bracketed on (0, 2*pi]")
        try:
            dphi = optimize.bisect(lambda d: amp_at(d) - target_amp, lo, hi, xtol=1e-13, maxiter=maxiter)
        except RuntimeError as exc:
            raise ConvergenceError(str(exc)) from exc

    base = profile_harmonic(profile, SymbolParams(0.0, dphi), l, panels)
    t0_frac = wrap_phase(np.angle(base) - target_phase) / (TWO_PI * l)
    t0_frac = t0_frac % 1.0
    params = SymbolParams(t0_frac, dphi)

    check = profile_harmonic(profile, params, l, panels)
    amp_err = abs(abs(check) - target_amp)
    phase_err = float(circular_distance(np.angle(check), target_phase))
    if amp_err > tol or phase_err > tol:
        raise ConvergenceError(f"solution misses target: |da| = {amp_err:.2e}, dphase = {phase_err:.2e}")
    return params


@dataclass(frozen=True)
class SolvedSymbol:
    entry: QamMapEntry
    params: SymbolParams
    achieved: complex
    amp_residual: float
    phase_residual: float


def solve_constellation(
    profile: AmplitudePhaseProfile,
    table: Sequence[QamMapEntry] = QAM16_TABLE,
    panels: int = 4096,
) -> list[SolvedSymbol]:
    """Re-derive the 16-QAM mapping for an arbitrary amplitude profile.

    Target amplitudes are the table's ring ratios scaled by the largest
    reachable first-harmonic amplitude; target phases are kept.
    """
    a_max = max_harmonic_amplitude(profile, 1, panels)
    out = []
    for e in table:
        target = e.amp * a_max
        p = solve_mapping(profile, target, e.phase, 1, panels)
        got = profile_harmonic(profile, p, 1, panels)
        out.append(
            SolvedSymbol(
                e,
                p,
                got,
                abs(abs(got) - target),
                float(circular_distance(np.angle(got), e.phase)),
            )
        )
    return out


def staircase_symbol_params(target_amp: float, target_phase: float, q: int | None) -> tuple[float, float]:
    """``(t0_frac, delta_phi)`` putting a staircase symbol on a target point.

    The target is relative to a full-turn, zero-shift symbol at the same
    ``q`` (the BPSK pilot), so a receiver that calibrates on that pilot sees
    exactly ``target_amp * exp(j*target_phase)``.  Solves
    ``sin(x) / (q*sin(x/q)) = target_amp`` for ``x = delta_phi/2 - pi`` in
    ``[-pi, 0]``; with ``q = None`` the left side is ``sinc(x)``.
    """
    if not 0.0 < target_amp <= 1.0:
        raise UnreachableTargetError("relative target amplitude must lie in (0, 1]")
    if q is not None and q < 2:
        raise DomainError("a staircase needs q >= 2 to carry a first harmonic")

    def gain(x):
        return float(sinc(x)) if q is None else float(_dirichlet_ratio(x, q))

    if target_amp == 1.0:
        x = 0.0
    else:
        x = optimize.bisect(lambda x: gain(x) - target_amp, -PI, 0.0, xtol=1e-15, maxiter=200)
    rel_phase = x if q is None else x * (1.0 - 1.0 / q)
    t0_frac = (wrap_phase(rel_phase - target_phase) / TWO_PI) % 1.0
    return t0_frac, 2.0 * (x + PI)


# ---------------------------------------------------------------------------
# Constellation CSV

CONSTELLATION_HEADER = ["symbol_index", "bits", "amp", "phase_rad", "t0_frac", "delta_phi_rad"]


def save_constellation_csv(table: Sequence[QamMapEntry], path, footer: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONSTELLATION_HEADER)
        for e in table:
            w.writerow([e.symbol_index, e.bits, repr(e.amp), repr(e.phase), repr(e.t0_frac), repr(e.delta_phi)])
        if footer:
            fh.write(footer.rstrip("\n") + "\n")


def load_constellation_csv(path) -> tuple[QamMapEntry, ...]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        missing = set(CONSTELLATION_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise DomainError(f"constellation CSV lacks columns {sorted(missing)}")
        entries = [
            QamMapEntry(
                int(r["symbol_index"]),
                r["bits"].strip().zfill(4),
                float(r["amp"]),
                float(r["phase_rad"]),
                float(r["t0_frac"]),
                float(r["delta_phi_rad"]),
            )
            for r in reader
        ]
    return tuple(sorted(entries, key=lambda e: e.symbol_index))
