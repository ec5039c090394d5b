"""
Beamforming gain of the surface
===============================

When every cell's phase cancels its path delay to the receiver, the cell
contributions add coherently and the received amplitude grows linearly with
the number of cells.  Random phases only grow like its square root.
"""

from rismimo.experiments import beam_scan

rows = beam_scan((1, 2, 4, 8, 16), draws=200, seed=0)
base = rows[0][1]
print("cells   |y| beamformed   gain   |y| random (mean)   coherent/random")
for cells, bf, rnd in rows:
    print(f"{cells:5d}   {bf:.4e}      {bf / base:6.1f}   {rnd:.4e}          {bf / rnd:6.1f}")
