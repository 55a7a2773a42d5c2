"""
One realization of the random bar
=================================

Draw an elastic modulus from the max-entropy gamma law and a white-noise
tip load, assemble the FEM matrices and integrate with Newmark.
"""
import math

from splitmc.bar import BarConfig, assemble, first_natural_frequency, simulate_realization
from splitmc.rng import derive_stream

config = BarConfig()
sol = simulate_realization(config, derive_stream(42, 0))
print(f"{sol.times.size} time levels, U(L, T) = {sol.final_tip:.3e} m")

###############################################################################
# Sanity check of the spatial discretization: the clamped-free bar without
# tip mass or spring has fundamental frequency pi/(2L) sqrt(E/rho).

plain = BarConfig(n_elements=100, k_lin=0.0, mass_tip=0.0)
w = first_natural_frequency(assemble(plain, plain.e_mean))
print(f"FEM {w:.2f} rad/s vs exact {math.pi / 2 * math.sqrt(plain.e_mean / plain.rho):.2f}")

###############################################################################
# A coarse look at the tip history, every 128th time level.

for t, u in zip(sol.times[::128], sol.tip_displacement[::128]):
    print(f"t = {1e3 * t:5.2f} ms   U = {u: .3e} m")
