"""2x2 frame structure, receiver chain and end-to-end link simulation.

Each RIS half carries one stream.  A frame is one sync subframe, one pilot
subframe and sixty data subframes of 64 symbols per stream.  In the pilot
subframe stream 1 sends BPSK in slots 0-31 while stream 2 is silent, then
the roles swap; "silent" is a zero sweep (``delta_phi = 0``), whose first
harmonic vanishes.

The simulated receiver works on the first-harmonic value of each symbol
slot, adds noise there, estimates the 2x2 channel by least squares on the
pilots, equalizes with zero forcing and slices to the nearest 16-QAM point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .analysis import max_symbol_rate
from .channel import flat_fading_transmit
from .errors import DomainError, LengthError, SingularChannelError
from .modulation import (
    PI,
    QAM16_TABLE,
    SymbolParams,
    constellation_points,
    nearest_index,
    sinc,
    staircase_symbol_params,
    symbol_coefficient,
)

# Known BPSK patterns; any fixed +-1 sequences work.
_PATTERN_RNG = np.random.default_rng(0x2A2A)
PILOT_SIGNS = 1 - 2 * _PATTERN_RNG.integers(0, 2, size=(2, 32))
SYNC_SIGNS = 1 - 2 * _PATTERN_RNG.integers(0, 2, size=(2, 64))

_BITS = np.array([[int(c) for c in e.bits] for e in QAM16_TABLE], dtype=np.uint8)
_WEIGHTS = np.array([8, 4, 2, 1])


@dataclass(frozen=True)
class FrameConfig:
    data_subframes: int = 60
    symbols_per_subframe: int = 64
    bits_per_symbol: int = 4
    streams: int = 2
    pilot_symbols: int = 64
    oversampling: int = 8
    symbol_rate: float = 2.5e6
    r_dac: float = 100e6
    q: int | None = 40

    def __post_init__(self):
        if self.streams != 2 or self.bits_per_symbol != 4:
            raise DomainError("only the 2-stream 16-QAM frame is supported")
        if self.pilot_symbols % 2 or self.pilot_symbols < 2:
            raise DomainError("pilot subframe length must be even")
        if self.q is not None and self.q < 2:
            raise DomainError("q must be >= 2 (or None) to carry a first harmonic")

    @property
    def data_symbols(self) -> int:
        return self.data_subframes * self.symbols_per_subframe

    @property
    def bits_per_stream(self) -> int:
        return self.data_symbols * self.bits_per_symbol

    @property
    def payload_bits(self) -> int:
        return self.streams * self.bits_per_stream

    @property
    def slots(self) -> int:
        return self.symbols_per_subframe + self.pilot_symbols + self.data_symbols

    @property
    def max_symbol_rate(self) -> float:
        return max_symbol_rate(self.r_dac, self.q) if self.q is not None else float("inf")

    @property
    def data_rate(self) -> float:
        """Payload bit rate with sync and pilot overhead ignored."""
        return self.streams * self.symbol_rate * self.bits_per_symbol


@dataclass(frozen=True)
class Frame:
    """Per-stream symbol settings for one frame.

    ``t0_frac`` and ``delta_phi`` have shape ``(2, slots)`` and hold the sync,
    pilot and data regions back to back.
    """

    cfg: FrameConfig
    t0_frac: np.ndarray
    delta_phi: np.ndarray
    pilot_tx: np.ndarray
    data_index: np.ndarray
    bits: np.ndarray

    @property
    def sync_slice(self) -> slice:
        return slice(0, self.cfg.symbols_per_subframe)

    @property
    def pilot_slice(self) -> slice:
        s = self.cfg.symbols_per_subframe
        return slice(s, s + self.cfg.pilot_symbols)

    @property
    def data_slice(self) -> slice:
        return slice(self.cfg.symbols_per_subframe + self.cfg.pilot_symbols, self.cfg.slots)

    def symbols(self, stream: int, region: str = "data", ts: float = 1.0) -> list[SymbolParams]:
        sl = {"sync": self.sync_slice, "pilot": self.pilot_slice, "data": self.data_slice}[region]
        return [
            SymbolParams(t * ts, d, ts, self.cfg.q)
            for t, d in zip(self.t0_frac[stream, sl], self.delta_phi[stream, sl])
        ]


def transmit_mapping(q: int | None, mode: str = "compensated") -> tuple[np.ndarray, np.ndarray]:
    """Sweep settings ``(t0_frac, delta_phi)`` for the 16 symbols.

    ``"table"`` uses the tabulated settings unchanged.  ``"compensated"``
    re-solves each symbol for the actual step count so that, relative to the
    BPSK pilot, the staircase lands exactly on the ideal point.
    """
    if mode == "table":
        return (
            np.array([e.t0_frac for e in QAM16_TABLE]),
            np.array([e.delta_phi for e in QAM16_TABLE]),
        )
    if mode != "compensated":
        raise DomainError(f"unknown mapping mode {mode!r}")
    t0, dphi = _compensated_mapping(q)
    return np.array(t0), np.array(dphi)


@lru_cache(maxsize=None)
def _compensated_mapping(q):
    solved = [staircase_symbol_params(e.amp, e.phase, q) for e in QAM16_TABLE]
    return tuple(s[0] for s in solved), tuple(s[1] for s in solved)


def _as_bits(bits, n: int) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if b.size != n:
        raise LengthError(f"expected {n} bits, got {b.size}")
    if np.any(b > 1):
        raise DomainError("bits must be 0 or 1")
    return b


def build_frame(bits1, bits2, cfg: FrameConfig = FrameConfig(), mapping=None) -> Frame:
    """Lay out one frame for two 15360-bit payloads.

    ``mapping`` is a ``(t0_frac, delta_phi)`` pair of length-16 arrays; the
    tabulated mapping is used when omitted.
    """
    n = cfg.bits_per_stream
    bits = np.stack([_as_bits(bits1, n), _as_bits(bits2, n)])
    t0_map, dphi_map = mapping if mapping is not None else transmit_mapping(cfg.q, "table")
    idx = bits.reshape(2, -1, 4) @ _WEIGHTS

    S, P = cfg.symbols_per_subframe, cfg.pilot_symbols
    half = P // 2
    t0 = np.zeros((2, cfg.slots))
    dphi = np.zeros((2, cfg.slots))

    # sync placeholder: full-turn BPSK
    dphi[:, :S] = 2 * PI
    t0[:, :S] = np.where(SYNC_SIGNS[:, :S] > 0, 0.0, 0.5)

    signs = np.resize(PILOT_SIGNS, (2, half))
    pilot_tx = np.zeros((2, P))
    pilot_tx[0, :half] = signs[0]
    pilot_tx[1, half:] = signs[1]
    active = pilot_tx != 0
    dphi[:, S:S + P] = np.where(active, 2 * PI, 0.0)
    t0[:, S:S + P] = np.where(pilot_tx < 0, 0.5, 0.0)

    t0[:, S + P:] = t0_map[idx]
    dphi[:, S + P:] = dphi_map[idx]
    return Frame(cfg, t0, dphi, pilot_tx, idx, bits)


def extract_harmonic(samples, l: int = 1, oversampling: int = 8, zoh: bool = True) -> complex:
    """First-harmonic (order ``l``) value of one symbol from its samples.

    Takes the DFT bin ``l`` normalized by the sample count.  With ``zoh`` the
    bin is also multiplied by ``sinc(l*pi/n) * exp(-j*l*pi/n)``, which turns it
    into the Fourier coefficient of the sample-and-hold waveform, so the hold
    values of an ``n``-step staircase return that staircase's coefficient.
    """
    x = np.asarray(samples, dtype=complex)
    n = x.shape[-1]
    if n != oversampling:
        raise LengthError(f"expected {oversampling} samples per symbol, got {n}")
    X = np.fft.fft(x, axis=-1)[..., l % n] / n
    if zoh:
        X = X * sinc(l * PI / n) * np.exp(-1j * l * PI / n)
    return complex(X) if np.ndim(X) == 0 else X


def ls_channel_estimate(pilot_rx, pilot_tx) -> np.ndarray:
    """Least-squares 2x2 estimate from time-orthogonal pilots.

    ``pilot_rx`` is ``(2 antennas, P)`` and ``pilot_tx`` is ``(2 streams, P)``
    with zeros in a stream's silent slots.  Entry ``(k, j)`` is the mean of
    ``Y_k / P_j`` over stream ``j``'s active slots; the transmit power
    factor stays inside the estimate.
    """
    Y = np.asarray(pilot_rx, dtype=complex)
    X = np.asarray(pilot_tx, dtype=complex)
    if Y.shape[0] != 2 or X.shape[0] != 2 or Y.shape[1] != X.shape[1]:
        raise DomainError("pilot arrays must both be (2, P)")
    h = np.empty((2, 2), dtype=complex)
    for j in range(2):
        act = X[j] != 0
        if not act.any():
            raise ZeroDivisionError(f"stream {j + 1} has no pilot symbols")
        h[:, j] = np.mean(Y[:, act] / X[j, act], axis=1)
    return h


def zf_equalize(h_est, Y) -> np.ndarray:
    """Zero-forcing ``h_est^-1 @ Y``; ``Y`` is a pair or a ``(2, n)`` block."""
    h = np.asarray(h_est, dtype=complex)
    det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    if abs(det) < 1e-12 * np.sum(np.abs(h) ** 2):
        raise SingularChannelError("estimated channel is singular")
    return np.linalg.solve(h, np.asarray(Y, dtype=complex))


@dataclass
class LinkReport:
    h_est: np.ndarray
    bit_errors: np.ndarray
    bits_per_stream: int
    constellations: np.ndarray = field(repr=False)

    @property
    def ber(self) -> np.ndarray:
        return self.bit_errors / self.bits_per_stream

    @property
    def ber1(self) -> float:
        return float(self.ber[0])

    @property
    def ber2(self) -> float:
        return float(self.ber[1])

    @property
    def ber_total(self) -> float:
        return 0.5 * (self.ber1 + self.ber2)

    @property
    def bits_compared(self) -> int:
        return 2 * self.bits_per_stream


def run_link(
    h,
    p: float,
    sigma2: float,
    bits1,
    bits2,
    cfg: FrameConfig = FrameConfig(),
    seed=None,
    mapping: str = "compensated",
    estimation: str = "run",
    csi: str = "ls",
) -> LinkReport:
    """Send payloads through the 2x2 link and count bit errors.

    The payloads must hold a whole number of frames.  With
    ``estimation="run"`` the per-frame LS estimates are averaged over all
    frames (the channel is constant); ``"frame"`` equalizes each frame with
    its own estimate.  ``csi="known"`` skips estimation and equalizes with
    the true effective channel, ``sqrt(p) * h`` times the pilot harmonic,
    which isolates the rest of the chain from estimation error.  ``seed`` may
    be an int, a SeedSequence or a Generator.
    """
    h = np.asarray(h, dtype=complex)
    n = cfg.bits_per_stream
    b1 = np.asarray(bits1, dtype=np.uint8).reshape(-1)
    b2 = np.asarray(bits2, dtype=np.uint8).reshape(-1)
    if b1.size != b2.size or b1.size == 0 or b1.size % n:
        raise LengthError(f"payloads must be equal whole multiples of {n} bits")
    if estimation not in ("run", "frame"):
        raise DomainError(f"unknown estimation mode {estimation!r}")
    if csi not in ("ls", "known"):
        raise DomainError(f"unknown csi mode {csi!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_frames = b1.size // n

    tx_map = transmit_mapping(cfg.q, mapping)
    ideal = constellation_points(QAM16_TABLE)
    scale = 1.0 / np.sqrt(np.mean(np.abs(ideal) ** 2))
    ref = ideal * scale

    frames, rx, estimates = [], [], []
    for f in range(n_frames):
        fr = build_frame(b1[f * n:(f + 1) * n], b2[f * n:(f + 1) * n], cfg, tx_map)
        sl = slice(fr.pilot_slice.start, cfg.slots)
        s = scale * symbol_coefficient(fr.t0_frac[:, sl], fr.delta_phi[:, sl], 1, cfg.q)
        y = flat_fading_transmit(h, s, p, sigma2, rng)
        P = cfg.pilot_symbols
        estimates.append(ls_channel_estimate(y[:, :P], scale * fr.pilot_tx))
        frames.append(fr)
        rx.append(y[:, P:])

    if csi == "known":
        run_est = np.sqrt(p) * h * symbol_coefficient(0.0, 2 * PI, 1, cfg.q)
        estimates = [run_est] * n_frames
    else:
        run_est = np.mean(estimates, axis=0)
    errors = np.zeros(2, dtype=np.int64)
    eq = []
    for fr, y, est in zip(frames, rx, estimates):
        s_hat = zf_equalize(run_est if estimation == "run" else est, y)
        idx = nearest_index(s_hat, ref)
        errors += np.count_nonzero(_BITS[idx] != fr.bits.reshape(2, -1, 4), axis=(1, 2))
        eq.append(s_hat)
    return LinkReport(run_est, errors, n * n_frames, np.concatenate(eq, axis=1))


def random_payload(rng: np.random.Generator, n_frames: int, cfg: FrameConfig = FrameConfig()):
    """Two random payloads of ``n_frames`` frames each."""
    b = rng.integers(0, 2, size=(2, n_frames * cfg.bits_per_stream), dtype=np.uint8)
    return b[0], b[1]


def payload_from_file(path, n_frames: int, cfg: FrameConfig = FrameConfig()):
    """Split a raw binary file into two payloads, cycling it to fill the frames."""
    raw = np.unpackbits(np.fromfile(path, dtype=np.uint8))
    if raw.size == 0:
        raise LengthError(f"{path} is empty")
    need = 2 * n_frames * cfg.bits_per_stream
    b = np.resize(raw, need).reshape(2, -1)
    return b[0], b[1]


def save_constellation_dump(report: LinkReport, path, footer: str | None = None) -> None:
    """Write equalized symbols as ``stream,slot,re,im``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stream", "slot", "re", "im"])
        for s in range(report.constellations.shape[0]):
            for i, v in enumerate(report.constellations[s]):
                w.writerow([s + 1, i, f"{v.real:.10g}", f"{v.imag:.10g}"])
        if footer:
            fh.write(footer.rstrip("\n") + "\n")
