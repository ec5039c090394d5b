"""
16-QAM from a swept reflection phase
====================================

Each symbol sweeps the cell phase linearly by ``delta_phi`` over one symbol
period, starting at a circular delay ``t0``.  The first harmonic of that
waveform is the QAM point: ``delta_phi`` sets its magnitude and ``t0``
rotates it.
"""

import numpy as np

from rismimo import QAM16_TABLE, SymbolParams, harmonic_coefficient
from rismimo.modulation import ideal_waveform

# a full-turn sweep puts all energy on the first harmonic
full = SymbolParams(0.0, 2 * np.pi)
print("full turn, t0=0:   a1 =", np.round(harmonic_coefficient(full, 1), 6))

# the same sweep delayed by a quarter symbol is rotated by -pi/2
quarter = SymbolParams(0.25, 2 * np.pi)
print("full turn, t0=T/4: a1 =", np.round(harmonic_coefficient(quarter, 1), 6))

# a shorter sweep gives a smaller first harmonic
for frac in (1.0, 0.59, 0.2745):
    a1 = harmonic_coefficient(SymbolParams(0.0, 2 * np.pi * frac), 1)
    print(f"delta_phi = {frac:6.4f} * 2pi -> |a1| = {abs(a1):.4f}")

# the whole mapping table
print()
print("bits   |a1|    angle/pi   t0/Ts    delta_phi/pi")
for e in QAM16_TABLE:
    a1 = harmonic_coefficient(e.params(), 1)
    print(f"{e.bits}  {abs(a1):.4f}  {np.angle(a1) % (2 * np.pi) / np.pi:8.4f}  {e.t0_frac:7.4f}  {e.delta_phi / np.pi:8.4f}")

# check the closed form against an FFT of a finely sampled symbol
e = QAM16_TABLE[6]
w = ideal_waveform(e.params(), 4096)
fft_a1 = np.fft.fft(w.samples)[1] / len(w.samples)
print()
print("symbol", e.bits, "closed form", np.round(harmonic_coefficient(e.params(), 1), 5), "fft", np.round(fft_a1, 5))
