"""Soliton + pilot-wave simulator.

Computes self-bound (Choquard) solitons, evolves the screened self-gravitating
wave equation with a split-step spectral integrator, integrates de
Broglie-Bohm guidance trajectories, extracts and calibrates the emergent
gravitational potential of delta-like soliton sources, and models the
attractive/repulsive pseudo-gravity of bouncing-droplet pairs.

Internal units set hbar = m = 1; SI constants enter only through
:func:`sgs.effective_gravity.calibrate_L`.
"""

__version__ = "0.1.0"

from .grid import (  # noqa: F401
    ComplexField,
    GridSpec,
    RealField,
    interpolate,
    l2_norm_sq,
    laplacian,
    read_field,
    spectral_gradient,
    write_field,
)
from .kernels import (  # noqa: F401
    KernelSpec,
    convolve_potential,
    helmholtz_green,
    poisson_solve,
    regularized_delta,
)
from .ground_state import (  # noqa: F401
    GroundStateResult,
    SolverOptions,
    energy_functional,
    scaling_sweep,
    solve_choquard,
)
from .evolution import (  # noqa: F401
    EvolutionConfig,
    ExternalPotential,
    StateSnapshot,
    evolve_linear_pilot,
    evolve_nls,
    stability_report,
)
from .guidance import (  # noqa: F401
    GaussianPacket,
    PlaneWavePacket,
    ProductPilot,
    SymmetrizedPilot,
    Trajectory,
    dbb_velocity,
    integrate_trajectory,
    integrate_two_particle,
    sample_from_density,
)
from .effective_gravity import (  # noqa: F401
    CalibrationResult,
    GravityFitResult,
    SourceModel,
    apply_minimal_coupling,
    build_source_field,
    calibrate_L,
    fit_newtonian,
    interaction_energy,
    kink_profile,
    solve_effective_potential,
)
from .droplets import (  # noqa: F401
    DropletPair,
    ForcingSpec,
    OrbitResult,
    classify_zones,
    orbit_equilibria,
    pair_interaction,
    pseudo_potential,
    simulate_orbit,
)
