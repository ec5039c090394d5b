"""
Finite DAC steps
================

A DAC updating at ``R_DAC`` can only hold ``q = R_DAC / R_s`` phase values per
symbol, so the ramp becomes a staircase.  The first harmonic shrinks by
``sinc(pi/q)`` and picks up a phase lag of ``pi/q``; by ``q = 10`` the loss
is already below 0.15 dB.
"""

import numpy as np

from rismimo import SymbolParams, discrete_harmonic_coefficient, max_symbol_rate
from rismimo.modulation import discrete_waveform
from rismimo.transceiver import extract_harmonic

print(" q   |a1|     loss dB   phase lag/pi")
for q in (2, 4, 8, 10, 16, 40, 1000):
    a1 = discrete_harmonic_coefficient(SymbolParams(0.0, 2 * np.pi, 1.0, q), 1)
    print(f"{q:4d} {abs(a1):.4f}  {-20 * np.log10(abs(a1)):8.4f}  {-np.angle(a1) / np.pi:10.5f}")

# the receiver's 8-sample harmonic extraction sees the same value at q = 8
p = SymbolParams(3 / 8, 1.3 * np.pi, 1.0, 8)
print()
print("q=8 symbol: closed form", np.round(discrete_harmonic_coefficient(p, 1), 6))
print("            extracted  ", np.round(extract_harmonic(discrete_waveform(p).samples), 6))

# symbol rate bound for a 100 MSa/s DAC
print()
for q in (40, 1000):
    print(f"q = {q:4d}: at most {max_symbol_rate(100e6, q) / 1e6:g} MSps")
