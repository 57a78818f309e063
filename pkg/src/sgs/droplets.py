"""Walker-pair dynamics in the oscillatory pseudo-gravitational potential.

Walkers are point particles; the standing-wave medium enters only through
the closed-form pair potential built on the Helmholtz Green function
``cos(k0 r)/r``:

    U(d) = -v^2 (M_B L_A + M_A L_B) cos(k0 d) / d

whose sign structure produces alternating attractive and repulsive zones.
Force-sign boundaries solve ``tan(k0 r) = -1/(k0 r)``; potential minima sit
near multiples of half the subharmonic (Faraday) wavelength, giving the
orbit "quantization" pattern ``d_n = (n/2 - eps) * lambda_F``. No
dissipation or propulsion is modeled: comparisons with real walkers are
structural (zones, radii spacing), not hydrodynamic.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import CollisionDetected, NoEquilibria
from .guidance import Trajectory
from .kernels import helmholtz_green

COLLISION_FRACTION = 1e-3  # of the Faraday wavelength


@dataclass(frozen=True)
class ForcingSpec:
    """Bath forcing: drive frequency f0 and wave speed v.

    The subharmonic response sets ``faraday_frequency = f0 / 2`` and (in the
    nondispersive approximation) ``faraday_wavelength = 2 * v / f0``, so the
    Helmholtz wavenumber is ``k0 = 2 pi f0 / v = 4 pi / lambda_F``.
    """

    forcing_frequency: float
    wave_speed: float

    def __post_init__(self):
        if not (self.forcing_frequency > 0 and self.wave_speed > 0):
            raise ValueError("forcing frequency and wave speed must be positive")

    @property
    def wavelength(self):
        return self.wave_speed / self.forcing_frequency

    @property
    def wavenumber(self):
        return 2.0 * np.pi * self.forcing_frequency / self.wave_speed

    @property
    def faraday_frequency(self):
        return self.forcing_frequency / 2.0

    @property
    def faraday_wavelength(self):
        return 2.0 * self.wavelength


@dataclass(frozen=True)
class DropletPair:
    """Two walkers: inertial masses and effective source lengths (the ratios
    between lengths and droplet sizes are free, order-unity parameters)."""

    mass_a: float
    mass_b: float
    length_a: float
    length_b: float

    def __post_init__(self):
        if min(self.mass_a, self.mass_b, self.length_a, self.length_b) <= 0:
            raise ValueError("masses and lengths must be positive")

    @property
    def coupling(self):
        return self.mass_b * self.length_a + self.mass_a * self.length_b

    @property
    def reduced_mass(self):
        return self.mass_a * self.mass_b / (self.mass_a + self.mass_b)


def pseudo_potential(x, sources, spec):
    """Field value ``-v^2 sum_i L_i cos(k0 r_i)/r_i`` at a point.

    ``sources`` is a sequence of ``(position, L)`` pairs; querying at a
    source position is rejected.
    """
    x = np.asarray(x, dtype=np.float64)
    k0 = spec.wavenumber
    total = 0.0
    for pos, lv in sources:
        r = float(np.linalg.norm(x - np.asarray(pos, dtype=np.float64)))
        if r == 0.0:
            raise ValueError("field point coincides with a source")
        total += lv * helmholtz_green(r, k0)
    return -spec.wave_speed**2 * total


def pair_interaction(d, pair, spec):
    """Mutual potential energy of the pair at separation ``d`` (self-energies
    excluded)."""
    if np.any(np.asarray(d) <= 0):
        raise ValueError("separation must be positive")
    return -spec.wave_speed**2 * pair.coupling * helmholtz_green(d, spec.wavenumber)


def _radial_derivative(d, pair, spec):
    """dU/dd; positive where the radial force is attractive."""
    k0 = spec.wavenumber
    c = spec.wave_speed**2 * pair.coupling
    return c * (k0 * np.sin(k0 * d) * d + np.cos(k0 * d)) / d**2


def _radial_second_derivative(d, pair, spec):
    k0 = spec.wavenumber
    c = spec.wave_speed**2 * pair.coupling
    return c * (
        k0**2 * np.cos(k0 * d) / d
        - 2.0 * k0 * np.sin(k0 * d) / d**2
        - 2.0 * np.cos(k0 * d) / d**3
    )


def _force_root_angles(theta_max):
    """Roots of ``theta sin(theta) + cos(theta) = 0`` in (0, theta_max]."""
    g = lambda t: t * np.sin(t) + np.cos(t)
    roots = []
    n = 1
    while n * np.pi - np.pi / 2.0 < theta_max:
        lo = n * np.pi - np.pi / 2.0 + 1e-12
        hi = min(n * np.pi - 1e-12, theta_max)
        if g(lo) * g(hi) < 0:
            roots.append(brentq(g, lo, hi, xtol=1e-15, rtol=1e-15))
        n += 1
    return np.asarray(roots)


def classify_zones(spec, r_max):
    """Alternating attractive/repulsive radial-force zones out to ``r_max``.

    Returns a list of ``((r_lo, r_hi), label)`` covering (0, r_max); the
    innermost zone is always attractive.
    """
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    k0 = spec.wavenumber
    boundaries = _force_root_angles(k0 * r_max) / k0
    boundaries = boundaries[boundaries < r_max]
    edges = np.concatenate([[0.0], boundaries, [r_max]])
    zones = []
    for i in range(len(edges) - 1):
        label = "attractive" if i % 2 == 0 else "repulsive"
        zones.append(((float(edges[i]), float(edges[i + 1])), label))
    return zones


@dataclass
class OrbitResult:
    """Potential-minimum radii with the fitted half-wavelength index pattern."""

    equilibrium_radii: np.ndarray
    n_indices: np.ndarray
    epsilon: float
    epsilon_stderr: float
    stability: np.ndarray
    residuals: np.ndarray  # per-radius, in units of the Faraday wavelength

    def scalars(self):
        return {
            "equilibrium_radii": [float(r) for r in self.equilibrium_radii],
            "n_indices": [int(n) for n in self.n_indices],
            "epsilon": self.epsilon,
            "epsilon_stderr": self.epsilon_stderr,
            "stability": [bool(s) for s in self.stability],
            "residuals": [float(r) for r in self.residuals],
        }


def orbit_equilibria(pair, spec, r_max):
    """Radii of the pair-potential minima and their quantization fit.

    Minima are the stationary radii with positive curvature; each is
    assigned the nearest half-wavelength index n and a single global offset
    eps is fitted to ``d_n = (n/2 - eps) * lambda_F`` (per-radius residuals
    reported alongside).

    Raises
    ------
    NoEquilibria
        No potential minimum below ``r_max``.
    """
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    k0 = spec.wavenumber
    stationary = _force_root_angles(k0 * r_max) / k0
    minima = np.array(
        [d for d in stationary if _radial_second_derivative(d, pair, spec) > 0]
    )
    if minima.size == 0:
        raise NoEquilibria(
            f"no potential minima below r_max = {r_max}; enlarge the range"
        )
    lam_f = spec.faraday_wavelength
    n_idx = np.rint(2.0 * minima / lam_f).astype(int)
    eps_per = n_idx / 2.0 - minima / lam_f
    eps = float(eps_per.mean())
    stderr = float(eps_per.std(ddof=1) / np.sqrt(eps_per.size)) \
        if eps_per.size > 1 else 0.0
    fitted = (n_idx / 2.0 - eps) * lam_f
    return OrbitResult(
        equilibrium_radii=minima,
        n_indices=n_idx,
        epsilon=eps,
        epsilon_stderr=stderr,
        stability=np.ones(minima.size, dtype=bool),
        residuals=(minima - fitted) / lam_f,
    )


def circular_orbit_speed(d, pair, spec):
    """Relative speed of a circular orbit at separation ``d`` (requires a
    radially attractive force there)."""
    du = _radial_derivative(d, pair, spec)
    if du <= 0:
        raise ValueError(f"no inward force at separation {d}; not an orbit radius")
    return float(np.sqrt(d * du / pair.reduced_mass))


def total_energy(pair, spec, positions, velocities):
    d = float(np.linalg.norm(positions[0] - positions[1]))
    kinetic = 0.5 * pair.mass_a * float(velocities[0] @ velocities[0]) \
        + 0.5 * pair.mass_b * float(velocities[1] @ velocities[1])
    return kinetic + pair_interaction(d, pair, spec)


def angular_momentum(pair, positions, velocities):
    masses = (pair.mass_a, pair.mass_b)
    return sum(
        m * np.cross(x, v) for m, x, v in zip(masses, positions, velocities)
    )


def simulate_orbit(pair, spec, positions, velocities, t_end, dt, record_stride=1):
    """Velocity-Verlet integration of the two-walker central-force system.

    Raises
    ------
    CollisionDetected
        Separation fell below ``1e-3 * faraday_wavelength``.
    """
    if dt <= 0 or t_end < dt:
        raise ValueError("need 0 < dt <= t_end")
    x = np.asarray(positions, dtype=np.float64).copy()
    v = np.asarray(velocities, dtype=np.float64).copy()
    if x.shape != (2, 3) or v.shape != (2, 3):
        raise ValueError("positions and velocities must have shape (2, 3)")
    masses = np.array([pair.mass_a, pair.mass_b])[:, None]
    d_min = COLLISION_FRACTION * spec.faraday_wavelength

    def forces(x):
        rel = x[0] - x[1]
        d = float(np.linalg.norm(rel))
        if d < d_min:
            raise CollisionDetected(
                f"separation {d:.3g} below {d_min:.3g}; integration aborted"
            )
        f_a = -_radial_derivative(d, pair, spec) * rel / d
        return np.stack([f_a, -f_a])

    n_steps = int(round(t_end / dt))
    acc = forces(x) / masses
    times = [0.0]
    pos_hist = [x.copy()]
    vel_hist = [v.copy()]
    for step in range(1, n_steps + 1):
        v_half = v + 0.5 * dt * acc
        x = x + dt * v_half
        acc = forces(x) / masses
        v = v_half + 0.5 * dt * acc
        if step % record_stride == 0 or step == n_steps:
            times.append(step * dt)
            pos_hist.append(x.copy())
            vel_hist.append(v.copy())
    return Trajectory(
        times=np.asarray(times),
        positions=np.stack(pos_hist),
        velocities=np.stack(vel_hist),
    )
