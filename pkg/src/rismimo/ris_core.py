"""Unit-cell reflection physics and RIS array geometry.

A unit cell reflects the incident carrier with a complex coefficient
``Gamma = A * exp(j*phi)`` set by its load impedance.  Real hardware couples
amplitude to phase; :class:`AmplitudePhaseProfile` captures that coupling as a
piecewise-linear curve ``A(phi)`` over one phase turn.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0
FREE_SPACE_IMPEDANCE = 377.0
TWO_PI = 2.0 * np.pi

Pattern = Callable[[np.ndarray, np.ndarray], np.ndarray]


def wrap_phase(phi):
    """Reduce phase(s) to ``[0, 2*pi)``."""
    out = np.mod(phi, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def circular_distance(a, b):
    """Smallest absolute angular difference between phases ``a`` and ``b``."""
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), TWO_PI))
    return np.minimum(d, TWO_PI - d)


def isotropic_pattern(theta, phi):
    """Normalized power pattern equal to 1 in every direction."""
    return np.ones(np.broadcast(np.asarray(theta), np.asarray(phi)).shape)


def cosine_pattern(theta, phi):
    """Normalized power pattern ``cos(theta)`` clipped to ``[0, 1]``.

    ``theta`` is measured from boresight, so the back hemisphere is zero.
    """
    theta, _ = np.broadcast_arrays(np.asarray(theta, dtype=float), phi)
    return np.clip(np.cos(theta), 0.0, 1.0)


@dataclass(frozen=True)
class RisGeometry:
    """Planar array of ``rows x cols`` identical unit cells.

    The surface lies in the ``z = 0`` plane, centred on the origin, and faces
    ``+z``.  Rows run along ``y`` and columns along ``x``.
    """

    rows: int
    cols: int
    cell_width: float
    cell_length: float
    carrier_freq: float
    cell_gain: float = 1.0
    pattern: Pattern = field(default=cosine_pattern, compare=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError("rows and cols must be >= 1")
        if self.cell_width <= 0 or self.cell_length <= 0:
            raise DomainError("cell dimensions must be positive")
        if self.carrier_freq <= 0:
            raise DomainError("carrier frequency must be positive")
        if self.cell_gain <= 0:
            raise DomainError("cell gain must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    @property
    def cell_area(self) -> float:
        return self.cell_width * self.cell_length

    def cell_positions(self) -> np.ndarray:
        """Cell centres as an array of shape ``(rows, cols, 3)`` in meters."""
        y = (np.arange(self.rows) - (self.rows - 1) / 2.0) * self.cell_length
        x = (np.arange(self.cols) - (self.cols - 1) / 2.0) * self.cell_width
        pos = np.zeros((self.rows, self.cols, 3))
        pos[..., 0] = x[None, :]
        pos[..., 1] = y[:, None]
        return pos


@dataclass(frozen=True)
class ReflectionCoefficient:
    """Complex reflection ``amplitude * exp(j*phase)`` of one unit cell."""

    amplitude: float
    phase: float

    def __post_init__(self):
        if not 0.0 <= self.amplitude <= 1.0 + 1e-12:
            raise DomainError(f"passive reflection needs 0 <= A <= 1, got {self.amplitude}")

    @property
    def value(self) -> complex:
        return self.amplitude * complex(np.exp(1j * self.phase))


@dataclass(frozen=True)
class LoadImpedance:
    z_load: complex
    z0: float = FREE_SPACE_IMPEDANCE

    def __post_init__(self):
        if self.z0 <= 0:
            raise DomainError("characteristic impedance must be positive")
        if complex(self.z_load).real < 0:
            raise DomainError("a passive load has a non-negative resistance")


def reflection_from_impedance(z: LoadImpedance) -> ReflectionCoefficient:
    """Reflection coefficient ``(Z - Z0) / (Z + Z0)`` of a loaded cell.

    The phase is the full-quadrant argument of the complex ratio, reduced to
    ``[0, 2*pi)``.  A matched load reflects nothing and reports phase 0.
    """
    zl = complex(z.z_load)
    den = zl + z.z0
    if den == 0:
        raise DomainError("Z_load = -Z0 makes the reflection coefficient singular")
    gamma = (zl - z.z0) / den
    amp = abs(gamma)
    phase = wrap_phase(np.arctan2(gamma.imag, gamma.real)) if amp > 0 else 0.0
    # reactive loads land on |Gamma| = 1 up to rounding
    return ReflectionCoefficient(min(amp, 1.0), phase)


@dataclass(frozen=True)
class AmplitudePhaseProfile:
    """Reflection amplitude as a function of commanded phase on ``[0, 2*pi]``.

    ``phases is None`` encodes the ideal constant-envelope cell (``A == 1``).
    Otherwise ``A`` is interpolated linearly between the breakpoints.
    """

    phases: tuple[float, ...] | None = None
    amplitudes: tuple[float, ...] | None = None
    name: str = "ideal"

    def __post_init__(self):
        if self.phases is None:
            if self.amplitudes is not None:
                raise DomainError("amplitudes given without phases")
            return
        ph = np.asarray(self.phases, dtype=float)
        am = np.asarray(self.amplitudes, dtype=float)
        if ph.ndim != 1 or ph.shape != am.shape or ph.size < 2:
            raise DomainError("need matching 1-D phase and amplitude breakpoints")
        if np.any(np.diff(ph) <= 0):
            raise DomainError("breakpoint phases must be strictly increasing")
        if abs(ph[0]) > 1e-9 or abs(ph[-1] - TWO_PI) > 1e-9:
            raise DomainError("breakpoints must cover [0, 2*pi]")
        if np.any(am <= 0):
            raise DomainError("amplitudes must be strictly positive")
        if np.any(am > 1.0 + 1e-12):
            raise DomainError("a passive cell cannot reflect with A > 1")

    @classmethod
    def ideal(cls) -> "AmplitudePhaseProfile":
        return cls()

    @classmethod
    def piecewise_linear(cls, phases, amplitudes, name="piecewise") -> "AmplitudePhaseProfile":
        return cls(tuple(float(p) for p in phases), tuple(float(a) for a in amplitudes), name)

    @property
    def is_ideal(self) -> bool:
        return self.phases is None

    @property
    def breakpoints(self) -> np.ndarray:
        """Interior breakpoint phases (kinks of ``A``), excluding 0 and 2*pi."""
        if self.phases is None:
            return np.empty(0)
        return np.asarray(self.phases[1:-1])

    def __call__(self, phi):
        """Vectorized ``A(phi)``; no domain check, for use inside quadratures."""
        if self.phases is None:
            return np.ones_like(np.asarray(phi, dtype=float))
        return np.interp(phi, self.phases, self.amplitudes)


def triangular_profile() -> AmplitudePhaseProfile:
    """Varactor-style 3 dB amplitude dip: 0.7 at 0 and 2*pi, 1.0 at pi."""
    return AmplitudePhaseProfile.piecewise_linear(
        (0.0, np.pi, TWO_PI), (0.7, 1.0, 0.7), name="triangular-3dB"
    )


def amplitude_at_phase(profile: AmplitudePhaseProfile, phi: float) -> float:
    """Reflection amplitude at commanded phase ``phi`` in ``[0, 2*pi]``."""
    if not 0.0 <= phi <= TWO_PI:
        raise DomainError(f"phase {phi} outside [0, 2*pi]; reduce it modulo 2*pi first")
    return float(profile(phi))


def load_profile_csv(path) -> AmplitudePhaseProfile:
    """Read a ``phase_rad,amplitude`` CSV into a piecewise-linear profile."""
    phases, amps = [], []
    with open(path, newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.DictReader(rows)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["phase_rad", "amplitude"]:
            raise DomainError("profile CSV header must be 'phase_rad,amplitude'")
        for row in reader:
            phases.append(float(row["phase_rad"]))
            amps.append(float(row["amplitude"]))
    return AmplitudePhaseProfile.piecewise_linear(phases, amps, name=Path(path).stem)


def save_profile_csv(profile: AmplitudePhaseProfile, path) -> None:
    if profile.is_ideal:
        phases, amps = (0.0, TWO_PI), (1.0, 1.0)
    else:
        phases, amps = profile.phases, profile.amplitudes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["phase_rad", "amplitude"])
        for p, a in zip(phases, amps):
            w.writerow([repr(float(p)), repr(float(a))])
