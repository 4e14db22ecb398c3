"""Pseudo-spectral laboratory for a damped compressible viscoelastic
system: lattice transforms, dyadic (Littlewood-Paley style) norms, the
explicit 2x2 mode semigroup, a nonlinear integrating-factor solver,
and decay-rate experiment drivers.
"""

from .lattice import (Lattice, MatrixField, SpectralField, VectorField,
                      apply_multiplier, dealias, derivative, dft_forward,
                      dft_inverse, divergence, field_from_coeffs, gradient,
                      jacobian, l2_inner,
                      l2_norm_spectral, lambda_power, leray_curl, leray_div,
                      lp_norm, zero_field)
from .littlewood_paley import (BesovSpec, DyadicPartition, HybridSpec,
                               besov_norm, block_norms, build_partition,
                               bump_chi, bump_phi, bump_u, chemin_lerner_norm,
                               dyadic_block, hybrid_norm, low_cutoff)
from .green import (GreenMatrix, GreenParams, apply_semigroup,
                    band_decay_curve, eigenvalues, green_hat, ode_oracle,
                    pointwise_bound_fit, radial_decay_quadrature,
                    sum_bound_scan)
from .solver import (BlowUpError, PhysicalParams, SimulationResult,
                     SolverConfig, State, check_constraints,
                     init_from_displacement, rhs, simulate, step)
from .analysis import (EnergyBlock, ReformulatedState, decay_functionals,
                       forcing_terms, high_freq_energy, reformulate)
from .harness import (DecayExperiment, FitResult, band_limited_displacement,
                      fit_slope, initial_pair, lattice_pair, radial_profile,
                      run_experiment, trig_band_state)
from .config import RunConfig

__version__ = "0.1.0"
