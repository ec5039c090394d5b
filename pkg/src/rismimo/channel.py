"""Free-space RIS-to-receiver channel, flat-fading transmission, beamforming.

Each unit cell is treated as a small antenna fed by the incident flux ``S``;
its field reaches receive antenna ``k`` with the Friis-type gain

    h = sqrt(G * Gr * lam**2 * F(AoD) * Frx(AoA)) / (4*pi*d) * exp(-j*2*pi*d/lam)

and the cell radiates power ``p = S * dx * dy``.  Entries of the full channel
matrix ``H`` (``K x N*M``) are ordered row-major over the cells, i.e. cell
``(n, m)`` sits at column ``n*M + m``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError
from .ris_core import TWO_PI, Pattern, RisGeometry, isotropic_pattern, wrap_phase


@dataclass(frozen=True)
class RxAntennaConfig:
    """Receive antenna: gain, pattern, position and boresight direction.

    ``boresight=None`` points the antenna at the RIS centre (the origin).
    """

    gain: float
    position: tuple[float, float, float]
    pattern: Pattern = field(default=isotropic_pattern, compare=False)
    boresight: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.gain <= 0:
            raise DomainError("receive gain must be positive")

    def boresight_vector(self) -> np.ndarray:
        if self.boresight is not None:
            b = np.asarray(self.boresight, dtype=float)
        else:
            b = -np.asarray(self.position, dtype=float)
        n = np.linalg.norm(b)
        if n == 0:
            raise DomainError("antenna at the RIS centre has no defined boresight")
        return b / n


@dataclass(frozen=True)
class LinkGeometry:
    """Distance and departure/arrival angles of one cell-to-antenna path."""

    distance: float
    aod: tuple[float, float]
    aoa: tuple[float, float]

    def __post_init__(self):
        if self.distance <= 0:
            raise DomainError("link distance must be positive")


@dataclass(frozen=True)
class ChannelMatrix:
    """Flat-fading gains plus the per-cell power they were derived for."""

    entries: np.ndarray
    flux: float = 1.0
    cell_area: float = 1.0

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2 or not np.all(np.isfinite(e)):
            raise ShapeError("channel entries must be a finite 2-D array")
        if self.flux <= 0 or self.cell_area <= 0:
            raise DomainError("cell power S*dx*dy must be positive")
        object.__setattr__(self, "entries", e)

    @property
    def cell_power(self) -> float:
        return self.flux * self.cell_area

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class BeamformingMatrix:
    phases: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(np.exp(1j * self.phases))


def _angles(v: np.ndarray, axis: np.ndarray):
    """Elevation from ``axis`` and azimuth around it of direction(s) ``v``."""
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    theta = np.arccos(np.clip(v @ axis, -1.0, 1.0))
    # azimuth in a frame whose z is `axis`
    ref = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    ex = ref - (ref @ axis) * axis
    ex /= np.linalg.norm(ex)
    ey = np.cross(axis, ex)
    phi = np.mod(np.arctan2(v @ ey, v @ ex), TWO_PI)
    return theta, phi


def link_geometry(cell_position, rx: RxAntennaConfig) -> LinkGeometry:
    """Geometry of the path from a cell (RIS normal ``+z``) to an antenna."""
    cell = np.asarray(cell_position, dtype=float)
    v = np.asarray(rx.position, dtype=float) - cell
    d = float(np.linalg.norm(v))
    if d == 0:
        raise DomainError("antenna coincides with a unit cell")
    aod = _angles(v, np.array([0.0, 0.0, 1.0]))
    aoa = _angles(-v, rx.boresight_vector())
    return LinkGeometry(d, (float(aod[0]), float(aod[1])), (float(aoa[0]), float(aoa[1])))


def link_table(geom: RisGeometry, rx_list: Sequence[RxAntennaConfig]) -> list[list[list[LinkGeometry]]]:
    """``links[k][n][m]`` for every antenna and cell."""
    pos = geom.cell_positions()
    return [
        [[link_geometry(pos[n, m], rx) for m in range(geom.cols)] for n in range(geom.rows)]
        for rx in rx_list
    ]


def free_space_channel(geom: RisGeometry, cell, rx: RxAntennaConfig, link: LinkGeometry | None = None) -> complex:
    """Free-space gain from cell ``(n, m)`` to one receive antenna.

    ``link`` defaults to the geometry implied by the cell and antenna
    positions.
    """
    if link is None:
        n, m = cell
        link = link_geometry(geom.cell_positions()[n, m], rx)
    d = link.distance
    if d <= 0:
        raise DomainError("singular geometry: zero distance")
    lam = geom.wavelength
    f_tx = float(geom.pattern(link.aod[0], link.aod[1]))
    f_rx = float(rx.pattern(link.aoa[0], link.aoa[1]))
    amp = np.sqrt(geom.cell_gain * rx.gain * lam**2 * f_tx * f_rx) / (4.0 * np.pi * d)
    return complex(amp * np.exp(-1j * TWO_PI * d / lam))


def _link_arrays(geom: RisGeometry, rx_list, links):
    """Distances and pattern products with shape ``(K, N, M)``."""
    K = len(rx_list)
    if links is None:
        links = link_table(geom, rx_list)
    if len(links) != K or any(len(lk) != geom.rows or any(len(r) != geom.cols for r in lk) for lk in links):
        raise ShapeError(f"link table must have shape ({K}, {geom.rows}, {geom.cols})")
    d = np.empty((K, geom.rows, geom.cols))
    f = np.empty_like(d)
    for k, rx in enumerate(rx_list):
        for n in range(geom.rows):
            for m in range(geom.cols):
                lk = links[k][n][m]
                d[k, n, m] = lk.distance
                f[k, n, m] = float(geom.pattern(*lk.aod)) * float(rx.pattern(*lk.aoa))
    return d, f


def channel_matrix(
    geom: RisGeometry, rx_list: Sequence[RxAntennaConfig], links=None, flux: float = 1.0
) -> ChannelMatrix:
    """Full ``K x N*M`` free-space channel, cells in row-major order."""
    d, f = _link_arrays(geom, rx_list, links)
    gains = np.array([rx.gain for rx in rx_list])[:, None, None]
    lam = geom.wavelength
    h = np.sqrt(geom.cell_gain * gains * lam**2 * f) / (4.0 * np.pi * d) * np.exp(-1j * TWO_PI * d / lam)
    return ChannelMatrix(h.reshape(len(rx_list), -1), flux, geom.cell_area)


def received_signal_theorem1(
    geom: RisGeometry,
    gamma,
    rx_list: Sequence[RxAntennaConfig],
    flux: float,
    links=None,
) -> np.ndarray:
    """Noise-free baseband envelope at each receive antenna.

    ``y_k = sum_{n,m} h^k_{n,m} * sqrt(S*dx*dy) * Gamma_{n,m}``; the carrier
    term is dropped.  ``gamma`` has shape ``(N, M)``.
    """
    g = np.asarray(gamma, dtype=complex)
    if g.shape != (geom.rows, geom.cols):
        raise ShapeError(f"gamma must have shape ({geom.rows}, {geom.cols}), got {g.shape}")
    H = channel_matrix(geom, rx_list, links, flux)
    return np.sqrt(H.cell_power) * (H.entries @ g.reshape(-1))


def flat_fading_transmit(H, x, p: float, noise_sigma2: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """``y = sqrt(p) * H @ x + n`` with circular complex Gaussian noise.

    ``x`` may be a vector or a matrix whose columns are successive symbol
    slots.  ``noise_sigma2`` is the variance per complex component.
    """
    Hm = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if Hm.ndim != 2 or x.shape[0] != Hm.shape[1]:
        raise ShapeError(f"cannot apply a {Hm.shape} channel to input of shape {x.shape}")
    if p < 0 or noise_sigma2 < 0:
        raise DomainError("power and noise variance must be non-negative")
    y = np.sqrt(p) * (Hm @ x)
    if noise_sigma2 > 0:
        if rng is None:
            raise DomainError("a random generator is needed when noise_sigma2 > 0")
        shape = y.shape
        y = y + np.sqrt(noise_sigma2 / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return y


def aggregate_halves(H, rows: int, cols: int) -> np.ndarray:
    """Collapse a ``K x N*M`` channel into ``K x 2`` by RIS half.

    Rows ``n < N/2`` drive stream 1 and the rest drive stream 2.
    """
    Hm = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=complex)
    if Hm.shape[1] != rows * cols or rows % 2:
        raise ShapeError("need an even number of rows matching the channel width")
    cube = Hm.reshape(Hm.shape[0], rows, cols)
    half = rows // 2
    return np.stack([cube[:, :half].sum(axis=(1, 2)), cube[:, half:].sum(axis=(1, 2))], axis=1)


def random_channel(rng: np.random.Generator, shape=(2, 2)) -> np.ndarray:
    """I.i.d. unit-variance circular complex Gaussian channel."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def beamforming_matrix(distances, wavelength: float) -> BeamformingMatrix:
    """Phases ``2*pi*d/lam`` that co-phase every cell at one antenna."""
    d = np.asarray(distances, dtype=float).reshape(-1)
    return BeamformingMatrix(wrap_phase(TWO_PI * d / wavelength))


# ---------------------------------------------------------------------------
# CSV interfaces

def save_channel_csv(H, path, footer: str | None = None) -> None:
    Hm = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "re", "im"])
        for (r, c), v in np.ndenumerate(Hm):
            w.writerow([r, c, repr(float(v.real)), repr(float(v.imag))])
        if footer:
            fh.write(footer.rstrip("\n") + "\n")


def load_channel_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["row", "col", "re", "im"]:
            raise ShapeError("channel CSV header must be 'row,col,re,im'")
        cells = [(int(r["row"]), int(r["col"]), complex(float(r["re"]), float(r["im"]))) for r in reader]
    if not cells:
        raise ShapeError("empty channel CSV")
    rows = 1 + max(c[0] for c in cells)
    cols = 1 + max(c[1] for c in cells)
    if len(cells) != rows * cols:
        raise ShapeError("channel CSV does not fill a full matrix")
    H = np.zeros((rows, cols), dtype=complex)
    for r, c, v in cells:
        H[r, c] = v
    return H


def load_positions_csv(path) -> np.ndarray:
    """Antenna positions from an ``x,y,z`` CSV (meters), one row per antenna."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x", "y", "z"]:
            raise ShapeError("geometry CSV header must be 'x,y,z'")
        pts = [(float(r["x"]), float(r["y"]), float(r["z"])) for r in reader]
    return np.array(pts).reshape(-1, 3)
