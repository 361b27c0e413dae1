"""Physical constants (CODATA 2018, SI units).

hbar, h, e and k_B are exact by the 2019 SI redefinition; G, epsilon_0
and the atomic mass unit carry their CODATA uncertainties in the last
digits quoted.
"""

HBAR = 1.054571817e-34        # J s
PLANCK = 6.62607015e-34       # J s (exact)
E_CHARGE = 1.602176634e-19    # C (exact)
K_B = 1.380649e-23            # J/K (exact)
G_NEWTON = 6.67430e-11        # m^3 / (kg s^2)
EPSILON_0 = 8.8541878128e-12  # F/m
ATOMIC_MASS = 1.66053906660e-27  # kg
