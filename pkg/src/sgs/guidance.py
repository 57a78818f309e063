"""Pilot-wave guidance: velocities from the phase gradient and trajectories.

The guidance velocity is ``v = Im(grad psi / psi)`` (hbar = m = 1), evaluated
by interpolating the spectrally differentiated pilot wave; the ratio form is
local and avoids phase unwrapping, which is ill-posed near nodes. Queries
where the relative density falls below ``NODE_FLOOR`` raise
:class:`~sgs.errors.NodeProximity` instead of returning noise.

Grid-based trajectories integrate with classical RK4 at a fixed step of one
quarter of the snapshot interval, with fields blended linearly in time
between snapshots. Two-particle pilots are closed-form descriptors (product
or symmetrized Gaussian/plane-wave packets); a 6D grid is never built.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import NodeProximity, StepOutOfBand, VelocityCapExceeded
from .grid import spectral_gradient

NODE_FLOOR = 1e-10
# Velocity change between adjacent snapshots, relative to the ensemble's
# velocity scale, beyond which linear-in-time blending is untrusted.
BAND_FRACTION = 0.10


@dataclass
class Trajectory:
    """Time series of particle positions and guidance velocities.

    ``positions`` and ``velocities`` have shape (n_times, n_particles, 3).
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(self.positions))
                and np.all(np.isfinite(self.velocities))):
            raise ValueError("trajectory data must be finite")

    @property
    def n_particles(self):
        return self.positions.shape[1]

    def particle(self, i):
        return self.positions[:, i, :], self.velocities[:, i, :]


class _Frame:
    """Pilot snapshot with precomputed gradient fields."""

    def __init__(self, snapshot):
        psi = snapshot.psi
        gx, gy, gz = spectral_gradient(psi)
        self.time = snapshot.time
        self.box_length = psi.spec.box_length
        self.fields = (psi.values, gx.values, gy.values, gz.values)
        self.max_density = float(np.max(psi.values.real**2 + psi.values.imag**2))

    def sample(self, points):
        L = self.box_length
        return [backend.trilinear(f, L, points) for f in self.fields]


def _velocity_from_samples(psi_v, gx_v, gy_v, gz_v, max_density, v_max):
    dens = psi_v.real**2 + psi_v.imag**2
    if np.any(dens < NODE_FLOOR * max_density):
        raise NodeProximity(
            "pilot density below the node floor at a queried point; "
            "velocity unreliable"
        )
    inv = 1.0 / psi_v
    v = np.stack([(gx_v * inv).imag, (gy_v * inv).imag, (gz_v * inv).imag], axis=-1)
    if v_max is not None:
        speed = np.sqrt(np.sum(v * v, axis=-1))
        if np.any(speed > v_max):
            raise VelocityCapExceeded(
                f"guidance speed {speed.max():.3g} exceeds cap {v_max:.3g}"
            )
    return v


def dbb_velocity(psi, x, v_max=None):
    """Guidance velocity at one point or a batch of points.

    Parameters
    ----------
    psi : ComplexField
        Pilot wave.
    x : (3,) or (P, 3) array-like
    v_max : float, optional
        Sanity cap; exceeding it raises :class:`VelocityCapExceeded`.

    Returns
    -------
    (3,) or (P, 3) ndarray
    """
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.ascontiguousarray(pts.reshape(-1, 3))
    gx, gy, gz = spectral_gradient(psi)
    L = psi.spec.box_length
    samples = [backend.trilinear(f, L, pts)
               for f in (psi.values, gx.values, gy.values, gz.values)]
    max_density = float(np.max(psi.values.real**2 + psi.values.imag**2))
    v = _velocity_from_samples(*samples, max_density, v_max)
    return v[0] if single else v


class _BlendedField:
    """Linear-in-time blend of two frames; linearity commutes with the
    trilinear interpolation, so points are sampled per frame and mixed."""

    def __init__(self, frame_a, frame_b):
        self.a = frame_a
        self.b = frame_b
        self.span = frame_b.time - frame_a.time
        self.max_density = max(frame_a.max_density, frame_b.max_density)

    def velocity(self, points, t, v_max):
        w = (t - self.a.time) / self.span
        sa = self.a.sample(points)
        sb = self.b.sample(points)
        mixed = [(1.0 - w) * va + w * vb for va, vb in zip(sa, sb)]
        return _velocity_from_samples(*mixed, self.max_density, v_max)


def _check_band(frame_a, frame_b, points, v_max):
    va = _velocity_from_samples(*frame_a.sample(points), frame_a.max_density, v_max)
    vb = _velocity_from_samples(*frame_b.sample(points), frame_b.max_density, v_max)
    dv = np.sqrt(np.sum((vb - va) ** 2, axis=-1))
    scale = max(
        float(np.sqrt(np.sum(va**2, axis=-1)).max()),
        float(np.sqrt(np.sum(vb**2, axis=-1)).max()),
    )
    if float(dv.max()) > BAND_FRACTION * scale + 1e-12:
        raise StepOutOfBand(
            f"velocity changed by {dv.max():.3g} between snapshots at "
            f"t = {frame_a.time:.6g} (scale {scale:.3g}); reduce the stride"
        )


def integrate_trajectory(pilot_snapshots, x_init, v_max=None, substeps=4):
    """RK4 integration of guidance trajectories through pilot snapshots.

    ``x_init`` may be a single (3,) start or an ensemble (P, 3); the full
    ensemble advances in lockstep (vectorized). Positions and velocities are
    recorded at the snapshot times.

    Raises
    ------
    NodeProximity, VelocityCapExceeded
        Propagated from velocity evaluation.
    StepOutOfBand
        Velocity field changed too much between adjacent snapshots.
    """
    if len(pilot_snapshots) < 2:
        raise ValueError("need at least two snapshots")
    x = np.atleast_2d(np.asarray(x_init, dtype=np.float64)).copy()
    frames = [_Frame(s) for s in pilot_snapshots]

    times = [frames[0].time]
    v0 = _velocity_from_samples(
        *frames[0].sample(np.ascontiguousarray(x)), frames[0].max_density, v_max
    )
    positions = [x.copy()]
    velocities = [v0]

    for fa, fb in zip(frames[:-1], frames[1:]):
        pts = np.ascontiguousarray(x)
        _check_band(fa, fb, pts, v_max)
        blend = _BlendedField(fa, fb)
        h = blend.span / substeps
        t = fa.time
        for _ in range(substeps):
            k1 = blend.velocity(np.ascontiguousarray(x), t, v_max)
            k2 = blend.velocity(np.ascontiguousarray(x + 0.5 * h * k1), t + 0.5 * h, v_max)
            k3 = blend.velocity(np.ascontiguousarray(x + 0.5 * h * k2), t + 0.5 * h, v_max)
            k4 = blend.velocity(np.ascontiguousarray(x + h * k3), t + h, v_max)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        times.append(fb.time)
        positions.append(x.copy())
        velocities.append(
            _velocity_from_samples(
                *fb.sample(np.ascontiguousarray(x)), fb.max_density, v_max
            )
        )
    return Trajectory(
        times=np.asarray(times),
        positions=np.stack(positions),
        velocities=np.stack(velocities),
    )


def sample_from_density(psi, n_samples, rng):
    """Draw positions distributed per the grid density ``|psi|^2``.

    Samples the node-cell categorical distribution then jitters uniformly
    within each cell (the piecewise-constant density the grid represents).
    """
    spec = psi.spec
    dens = (psi.values.real**2 + psi.values.imag**2).ravel()
    p = dens / dens.sum()
    idx = rng.choice(dens.size, size=n_samples, p=p)
    n = spec.n_per_axis
    h = spec.spacing
    ijk = np.stack(np.unravel_index(idx, spec.shape), axis=-1)
    nodes = (ijk - n // 2) * h
    return nodes + (rng.random((n_samples, 3)) - 0.5) * h


def regime_diagnostic(trajectory, soliton_width):
    """Low-velocity-regime indicator: max speed times soliton width (hbar = 1).

    Values well below 1 support the slow-guidance approximations; the number
    is reported, not enforced.
    """
    speeds = np.sqrt(np.sum(trajectory.velocities**2, axis=-1))
    return float(speeds.max()) * float(soliton_width)


# ---------------------------------------------------------------------------
# Analytic two-particle pilots


@dataclass(frozen=True)
class PlaneWavePacket:
    """Free plane wave ``exp(i (k . x - |k|^2 t / 2))``."""

    wavevector: tuple

    def value(self, x, t):
        k = np.asarray(self.wavevector)
        phase = x @ k - 0.5 * float(k @ k) * t
        return np.exp(1j * phase)

    def gradient(self, x, t):
        k = np.asarray(self.wavevector)
        return 1j * k * self.value(x, t)[..., None]

    def max_amplitude(self, t):
        return 1.0


@dataclass(frozen=True)
class GaussianPacket:
    """Free spreading Gaussian packet of initial width sigma, drifting at
    ``velocity``; closed-form value and gradient at any time."""

    center: tuple
    width: float
    velocity: tuple = (0.0, 0.0, 0.0)

    def _gamma(self, t):
        return 1.0 + 0.5j * t / self.width**2

    def value(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        x0 = np.asarray(self.center)
        v = np.asarray(self.velocity)
        g = self._gamma(t)
        pref = (2.0 * np.pi * self.width**2) ** -0.75 * g**-1.5
        d = x - x0 - v * t
        expo = (
            -np.sum(d * d, axis=-1) / (4.0 * self.width**2 * g)
            + 1j * ((x - x0) @ v)
            - 0.5j * float(v @ v) * t
        )
        return pref * np.exp(expo)

    def gradient(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        x0 = np.asarray(self.center)
        v = np.asarray(self.velocity)
        g = self._gamma(t)
        d = x - x0 - v * t
        coeff = -d / (2.0 * self.width**2 * g) + 1j * v
        return coeff * self.value(x, t)[..., None]

    def max_amplitude(self, t):
        return float(
            (2.0 * np.pi * self.width**2) ** -0.75 * abs(self._gamma(t)) ** -1.5
        )


@dataclass(frozen=True)
class ProductPilot:
    """Separable two-particle pilot ``p1(x1, t) * p2(x2, t)``."""

    packet1: object
    packet2: object

    def value(self, x1, x2, t):
        return self.packet1.value(x1, t) * self.packet2.value(x2, t)

    def gradients(self, x1, x2, t):
        v1 = self.packet1.value(x1, t)
        v2 = self.packet2.value(x2, t)
        return self.packet1.gradient(x1, t) * v2, self.packet2.gradient(x2, t) * v1

    def max_amplitude(self, t):
        return self.packet1.max_amplitude(t) * self.packet2.max_amplitude(t)


@dataclass(frozen=True)
class SymmetrizedPilot:
    """Bosonic-symmetrized pair ``pa(x1) pb(x2) + pa(x2) pb(x1)``."""

    packet_a: object
    packet_b: object

    def value(self, x1, x2, t):
        return (
            self.packet_a.value(x1, t) * self.packet_b.value(x2, t)
            + self.packet_a.value(x2, t) * self.packet_b.value(x1, t)
        )

    def gradients(self, x1, x2, t):
        a1, a2 = self.packet_a.value(x1, t), self.packet_a.value(x2, t)
        b1, b2 = self.packet_b.value(x1, t), self.packet_b.value(x2, t)
        da1, da2 = self.packet_a.gradient(x1, t), self.packet_a.gradient(x2, t)
        db1, db2 = self.packet_b.gradient(x1, t), self.packet_b.gradient(x2, t)
        return da1 * b2 + db1 * a2, db2 * a1 + da2 * b1

    def max_amplitude(self, t):
        return 2.0 * self.packet_a.max_amplitude(t) * self.packet_b.max_amplitude(t)


def two_particle_velocities(pilot, x1, x2, t, v_max=None):
    """Per-particle guidance velocities from an analytic two-particle pilot."""
    psi = pilot.value(x1, x2, t)
    bound = pilot.max_amplitude(t)
    if abs(psi) ** 2 < NODE_FLOOR * bound**2:
        raise NodeProximity("two-particle pilot below the node floor")
    g1, g2 = pilot.gradients(x1, x2, t)
    v1 = (g1 / psi).imag
    v2 = (g2 / psi).imag
    if v_max is not None and max(np.linalg.norm(v1), np.linalg.norm(v2)) > v_max:
        raise VelocityCapExceeded("two-particle guidance speed exceeds cap")
    return v1, v2


def integrate_two_particle(pilot, x1_init, x2_init, t_end, dt, v_max=None):
    """RK4 integration of the coupled two-particle guidance equations."""
    if dt <= 0 or t_end < dt:
        raise ValueError("need 0 < dt <= t_end")
    n_steps = int(round(t_end / dt))
    x = np.vstack([np.asarray(x1_init, float), np.asarray(x2_init, float)])

    def rhs(state, t):
        v1, v2 = two_particle_velocities(pilot, state[0], state[1], t, v_max)
        return np.vstack([v1, v2])

    times = [0.0]
    positions = [x.copy()]
    velocities = [rhs(x, 0.0)]
    t = 0.0
    for _ in range(n_steps):
        k1 = rhs(x, t)
        k2 = rhs(x + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(x + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(x + dt * k3, t + dt)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
        times.append(t)
        positions.append(x.copy())
        velocities.append(rhs(x, t))
    return Trajectory(
        times=np.asarray(times),
        positions=np.stack(positions),
        velocities=np.stack(velocities),
    )


def write_trajectory_csv(path, trajectory):
    """CSV export: ``t,x,y,z,vx,vy,vz`` rows, one block per particle."""
    with open(path, "w") as fh:
        fh.write("t,x,y,z,vx,vy,vz\n")
        for p in range(trajectory.n_particles):
            fh.write(f"# particle {p}\n")
            pos, vel = trajectory.particle(p)
            for t, r, v in zip(trajectory.times, pos, vel):
                fh.write(
                    f"{t!r},{r[0]!r},{r[1]!r},{r[2]!r},"
                    f"{v[0]!r},{v[1]!r},{v[2]!r}\n"
                )
