"""Experiment runners shared by the command line, demos and tests.

Every runner is a pure function of its arguments and a seed.  Random
substreams come from ``numpy.random.SeedSequence`` spawning, one child per
SNR point, so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import predict_ber
from .channel import RxAntennaConfig, beamforming_matrix, link_table, random_channel, received_signal_theorem1
from .errors import DomainError
from .modulation import PI, QAM16_TABLE, constellation_points, symbol_coefficient
from .ris_core import RisGeometry, isotropic_pattern
from .transceiver import FrameConfig, random_payload, run_link, transmit_mapping

BER_HEADER = [
    "snr_rx1_db",
    "ber_stream1",
    "ber_stream2",
    "ber_total",
    "ber_theory1",
    "ber_theory2",
    "ber_theory_total",
    "bits",
]


def mean_symbol_energy(q: int | None, mapping: str = "compensated") -> float:
    """Mean first-harmonic energy of the transmitted data symbols.

    The constellation is scaled to unit energy before the staircase loss, so
    this is ``|c_q|^2`` for the compensated mapping (1 when unbounded).
    """
    t0, dphi = transmit_mapping(q, mapping)
    ideal = constellation_points(QAM16_TABLE)
    scale = 1.0 / np.sqrt(np.mean(np.abs(ideal) ** 2))
    return float(np.mean(np.abs(scale * symbol_coefficient(t0, dphi, 1, q)) ** 2))


def noise_for_snr_rx1(h, p: float, snr_db: float, q: int | None = None, mapping: str = "compensated") -> float:
    """Noise variance giving the requested measured SNR on antenna 1.

    Measured SNR is received signal power over noise power, so the
    staircase harmonic loss counts as lost signal.  ``inf`` returns 0.
    """
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    h = np.asarray(h, dtype=complex)
    row = abs(h[0, 0]) ** 2 + abs(h[0, 1]) ** 2
    return p * mean_symbol_energy(q, mapping) * row / 10.0 ** (snr_db / 10.0)


def sweep_channel(seed: int) -> np.ndarray:
    """The fixed 2x2 channel a sweep with this seed uses."""
    return random_channel(np.random.default_rng(np.random.SeedSequence([seed, 0])))


@dataclass(frozen=True)
class BerRow:
    snr_rx1_db: float
    ber1: float
    ber2: float
    ber_total: float
    theory1: float
    theory2: float
    theory_total: float
    bits: int

    def as_list(self) -> list:
        return [
            self.snr_rx1_db,
            self.ber1,
            self.ber2,
            self.ber_total,
            self.theory1,
            self.theory2,
            self.theory_total,
            self.bits,
        ]


def frames_for_bits(bits: int, cfg: FrameConfig = FrameConfig()) -> int:
    """Smallest whole number of frames carrying at least ``bits`` payload bits."""
    if bits < 1:
        raise DomainError("bits must be positive")
    return -(-bits // cfg.payload_bits)


def ber_sweep(
    snr_db_grid,
    bits: int,
    seed: int,
    cfg: FrameConfig = FrameConfig(),
    h=None,
    p: float = 1.0,
    mapping: str = "compensated",
    estimation: str = "run",
    stream_tag: int = 0,
    csi: str = "ls",
) -> list[BerRow]:
    """Measured and theoretical BER at each antenna-1 SNR.

    ``h`` defaults to :func:`sweep_channel`. ``stream_tag`` separates the
    noise substreams of sweeps that share a seed (e.g. two ``q`` values).
    """
    grid = [float(s) for s in snr_db_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("SNR grid must be strictly increasing")
    h = sweep_channel(seed) if h is None else np.asarray(h, dtype=complex)
    n_frames = frames_for_bits(bits, cfg)
    children = np.random.SeedSequence([seed, 1, stream_tag]).spawn(len(grid))
    rows = []
    for snr_db, child in zip(grid, children):
        rng = np.random.default_rng(child)
        b1, b2 = random_payload(rng, n_frames, cfg)
        sigma2 = noise_for_snr_rx1(h, p, snr_db, cfg.q, mapping)
        rep = run_link(h, p, sigma2, b1, b2, cfg, rng, mapping, estimation, csi)
        if sigma2 == 0:
            t1 = t2 = 0.0
        else:
            pred = predict_ber(h, 10.0 ** (snr_db / 10.0), "exact")
            t1, t2 = pred.ber1, pred.ber2
        rows.append(BerRow(snr_db, rep.ber1, rep.ber2, rep.ber_total, t1, t2, 0.5 * (t1 + t2), rep.bits_compared))
    return rows


def staircase_amplitude_table(qs) -> list[tuple[int, float]]:
    """``|a1|`` of a full-turn staircase symbol for each step count."""
    return [(int(q), float(abs(symbol_coefficient(0.0, 2 * PI, 1, int(q))))) for q in qs]


def beam_scan(
    sizes=(4, 8, 16),
    distance: float = 100.0,
    carrier_freq: float = 5.8e9,
    draws: int = 200,
    seed: int = 0,
    rx_offset=(0.3, 0.2),
) -> list[tuple[int, float, float]]:
    """``(cells, beamformed |y|, mean random-phase |y|)`` for square arrays.

    Half-wavelength cells, isotropic patterns, unit flux and gains; the
    receiver sits ``distance`` meters out, slightly off the array normal.
    """
    lam = 299_792_458.0 / carrier_freq
    rx = RxAntennaConfig(1.0, (rx_offset[0] * distance, rx_offset[1] * distance, distance))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    out = []
    for n in sizes:
        geom = RisGeometry(n, n, lam / 2, lam / 2, carrier_freq, pattern=isotropic_pattern)
        links = link_table(geom, [rx])
        d = np.array([[lk.distance for lk in row] for row in links[0]])
        phases = beamforming_matrix(d, lam).phases.reshape(n, n)
        y_bf = abs(received_signal_theorem1(geom, np.exp(1j * phases), [rx], 1.0, links)[0])
        rnd = [
            abs(received_signal_theorem1(geom, np.exp(1j * rng.uniform(0, 2 * PI, (n, n))), [rx], 1.0, links)[0])
            for _ in range(draws)
        ]
        out.append((n * n, float(y_bf), float(np.mean(rnd))))
    return out
