"""Closed-form performance predictions for the 2x2 ZF link.

All SNRs are linear power ratios and assume unit mean symbol energy on the
first harmonic; the transceiver normalizes its constellation to match.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, SingularChannelError


def erfc(x):
    """Complementary error function."""
    return special.erfc(x)


@dataclass(frozen=True)
class SnrPair:
    snr1: float
    snr2: float


@dataclass(frozen=True)
class BerPrediction:
    ber1: float
    ber2: float
    mode: str

    @property
    def ber_total(self) -> float:
        return 0.5 * (self.ber1 + self.ber2)


def _check_2x2(h):
    h = np.asarray(h, dtype=complex)
    if h.shape != (2, 2):
        raise DomainError(f"expected a 2x2 channel, got shape {h.shape}")
    det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    if abs(det) <= 1e-12 * max(np.sum(np.abs(h) ** 2), 1e-300):
        raise SingularChannelError("channel matrix is singular")
    return h, abs(det) ** 2


def zf_snr(h, p: float, sigma2: float) -> SnrPair:
    """Post-ZF SNR of each stream for channel ``h``, power ``p``, noise ``sigma2``."""
    if p <= 0 or sigma2 <= 0:
        raise DomainError("p and sigma2 must be positive")
    h, det2 = _check_2x2(h)
    a = np.abs(h) ** 2
    return SnrPair(
        float(p * det2 / ((a[1, 1] + a[0, 1]) * sigma2)),
        float(p * det2 / ((a[1, 0] + a[0, 0]) * sigma2)),
    )


def snr_rx1(h, p: float, sigma2: float) -> float:
    """Receive SNR on antenna 1, ``p*(|h11|^2 + |h12|^2)/sigma2``."""
    h = np.asarray(h, dtype=complex)
    return float(p * (abs(h[0, 0]) ** 2 + abs(h[0, 1]) ** 2) / sigma2)


def snr_from_rx1(snr_rx1_linear: float, h) -> SnrPair:
    """Post-ZF stream SNRs expressed through the measured SNR of antenna 1."""
    if snr_rx1_linear <= 0:
        raise DomainError("snr_rx1 must be positive")
    h, det2 = _check_2x2(h)
    a = np.abs(h) ** 2
    row1 = a[0, 0] + a[0, 1]
    return SnrPair(
        float(snr_rx1_linear * det2 / ((a[1, 1] + a[0, 1]) * row1)),
        float(snr_rx1_linear * det2 / ((a[1, 0] + a[0, 0]) * row1)),
    )


def ber_16qam_approx(snr):
    """Two-term Gray 16-QAM BER, ``3/8 erfc(z) + 1/4 erfc(3z)``, ``z = sqrt(snr/10)``.

    Not clipped: at very low SNR the value exceeds 0.5 and a warning is issued.
    """
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise DomainError("snr must be non-negative")
    z = np.sqrt(snr / 10.0)
    ber = 0.375 * erfc(z) + 0.25 * erfc(3.0 * z)
    if np.any(ber > 0.5):
        warnings.warn("two-term 16-QAM BER approximation exceeds 0.5 at this SNR", RuntimeWarning, stacklevel=2)
    return float(ber) if ber.ndim == 0 else ber


def ber_16qam_exact(snr):
    """Exact bit error rate of Gray-coded square 16-QAM over AWGN.

    Per dimension the constellation is Gray 4-PAM; averaging its sign bit
    ``(Q(u) + Q(3u))/2`` and inner bit ``(2Q(u) + Q(3u) - Q(5u))/2`` with
    ``u = sqrt(snr/5)`` gives ``3/8 erfc(z) + 1/4 erfc(3z) - 1/8 erfc(5z)``.
    """
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise DomainError("snr must be non-negative")
    z = np.sqrt(snr / 10.0)
    ber = 0.375 * erfc(z) + 0.25 * erfc(3.0 * z) - 0.125 * erfc(5.0 * z)
    return float(ber) if ber.ndim == 0 else ber


def predict_ber(h, snr_rx1_linear: float, mode: str = "exact") -> BerPrediction:
    """Per-stream BER at a given antenna-1 SNR."""
    snrs = snr_from_rx1(snr_rx1_linear, h)
    if mode == "exact":
        f = ber_16qam_exact
    elif mode == "approx":
        f = ber_16qam_approx
    else:
        raise DomainError(f"unknown BER mode {mode!r}")
    return BerPrediction(float(f(snrs.snr1)), float(f(snrs.snr2)), mode)


def max_symbol_rate(r_dac: float, q: int) -> float:
    """Fastest symbol rate a DAC of rate ``r_dac`` sustains at ``q`` steps/symbol."""
    if r_dac <= 0 or q < 1:
        raise DomainError("need r_dac > 0 and q >= 1")
    return r_dac / q
