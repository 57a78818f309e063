"""Real-time split-step propagation of the self-interacting wave equation.

Strang splitting per step: half kinetic in Fourier space (multiplier
``exp(-i |k|^2 dt / 4)`` in hbar = m = 1 units), full potential step
``exp(-i (V_ext + V_nl) dt)`` with the self-interaction recomputed from the
current ``|psi|^2``, half kinetic. Consecutive kinetic half-steps merge into
full steps away from snapshot boundaries. Every factor is unitary, so the
norm is conserved to round-off; drift beyond 1e-6 relative signals a
too-large ``dt`` and raises.

A negative ``dt`` runs the same scheme backward in time (used by the
time-reversal diagnostics).
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import NonFinite, NormDrift
from .grid import (
    ComplexField,
    RealField,
    barycentre,
    fftn,
    ifftn,
    k_squared,
    rms_radius,
)
from .kernels import convolve_potential

NORM_BAND = 1e-6


@dataclass(frozen=True)
class ExternalPotential:
    """Analytic time-independent potential family (enables closed-form oracles)."""

    kind: str  # "uniform" | "linear" | "harmonic"
    value: float = 0.0
    gradient: tuple = (0.0, 0.0, 0.0)
    omega: float = 0.0
    center: tuple = (0.0, 0.0, 0.0)

    @classmethod
    def uniform(cls, value):
        return cls(kind="uniform", value=value)

    @classmethod
    def linear(cls, gradient):
        return cls(kind="linear", gradient=tuple(float(g) for g in gradient))

    @classmethod
    def harmonic(cls, omega, center=(0.0, 0.0, 0.0)):
        return cls(kind="harmonic", omega=float(omega),
                   center=tuple(float(c) for c in center))

    def sample(self, spec):
        x, y, z = spec.meshgrid()
        if self.kind == "uniform":
            return np.full(spec.shape, self.value)
        if self.kind == "linear":
            gx, gy, gz = self.gradient
            return gx * x + gy * y + gz * z
        if self.kind == "harmonic":
            cx, cy, cz = self.center
            r2 = (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2
            return 0.5 * self.omega**2 * r2
        raise ValueError(f"unknown external potential kind {self.kind!r}")


@dataclass(frozen=True)
class EvolutionConfig:
    """Time stepping: ``dt`` (negative = backward run), end time, snapshot stride."""

    dt: float
    t_end: float
    snapshot_stride: int = 1
    external_potential: object = None  # None, RealField, or ExternalPotential

    def validate(self, spec):
        if self.dt == 0:
            raise ValueError("dt must be nonzero")
        if abs(self.dt) >= spec.spacing**2:
            raise ValueError(
                f"dt = {abs(self.dt)} must stay below spacing^2 = {spec.spacing**2}"
            )
        if self.t_end < abs(self.dt):
            raise ValueError("t_end must be at least one step")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")

    def sample_potential(self, spec):
        vext = self.external_potential
        if vext is None:
            return None
        if isinstance(vext, RealField):
            if vext.spec != spec:
                raise ValueError("external potential sampled on a different grid")
            return vext.values
        return vext.sample(spec)


@dataclass
class StateSnapshot:
    time: float
    psi: ComplexField
    norm_sq: float
    width: float
    barycentre: np.ndarray


def _snapshot(spec, t, psi_values, dv):
    density = psi_values.real**2 + psi_values.imag**2
    norm_sq = float(density.sum()) * dv
    bc = barycentre(density, spec)
    return StateSnapshot(
        time=t,
        psi=ComplexField(spec, psi_values.copy(), check=False),
        norm_sq=norm_sq,
        width=rms_radius(density, spec, bc),
        barycentre=bc,
    )


def evolve_nls(psi0, kernel, cfg):
    """Propagate the nonlinear equation; returns snapshots at the stride.

    ``kernel=None`` (or zero coupling) drops the self-interaction and evolves
    the linear equation.

    Raises
    ------
    NormDrift
        Norm left the 1e-6 relative band (dt too large).
    NonFinite
        NaN/Inf appeared in the state.
    """
    spec = psi0.spec
    cfg.validate(spec)
    dv = spec.cell_volume
    dt = cfg.dt
    n_steps = max(1, int(round(cfg.t_end / abs(dt))))
    v_ext = cfg.sample_potential(spec)
    nonlinear = kernel is not None and kernel.coupling != 0.0

    half = np.exp(k_squared(spec) * (-0.25j * dt))
    full = half * half
    psi = psi0.values.astype(np.complex128).copy()
    snapshots = [_snapshot(spec, 0.0, psi, dv)]
    norm0 = snapshots[0].norm_sq

    psi_k = fftn(psi)
    pending_half = False  # second half-kinetic of the previous step not yet applied
    for step in range(1, n_steps + 1):
        psi_k *= full if pending_half else half
        psi = ifftn(psi_k)
        if nonlinear:
            density = psi.real**2 + psi.imag**2
            v_nl = ifftn(fftn(density) * _nl_multiplier(kernel, spec)).real \
                * (-kernel.coupling)
            v_step = v_nl if v_ext is None else v_nl + v_ext
        else:
            v_step = v_ext
        if v_step is not None:
            backend.phase_apply(psi, v_step, dt)
        psi_k = fftn(psi)
        pending_half = True
        if step % cfg.snapshot_stride == 0 or step == n_steps:
            psi_k *= half
            pending_half = False
            psi = ifftn(psi_k)
            snap = _snapshot(spec, step * dt, psi, dv)
            if not np.isfinite(snap.norm_sq) or not np.all(np.isfinite(psi)):
                raise NonFinite(f"state became non-finite at t = {snap.time:.6g}")
            if abs(snap.norm_sq - norm0) > NORM_BAND * norm0:
                raise NormDrift(
                    f"norm drifted by {abs(snap.norm_sq - norm0) / norm0:.3e} "
                    f"relative at t = {snap.time:.6g}; reduce dt"
                )
            snapshots.append(snap)
    return snapshots


def _nl_multiplier(kernel, spec):
    from .kernels import _multiplier

    return _multiplier(kernel, spec)


def evolve_linear_pilot(psi0, cfg):
    """Linear (source-free) propagation: the pilot wave."""
    return evolve_nls(psi0, None, cfg)


def stability_report(snapshots):
    """Relative drifts over a run.

    Width and norm drifts are relative to their initial values; barycentre
    drift is the displacement in units of the initial width (absolute when
    the initial width vanishes).
    """
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    first, last = snapshots[0], snapshots[-1]
    width_drift = (
        abs(last.width - first.width) / first.width if first.width > 0 else 0.0
    )
    displacement = float(np.linalg.norm(last.barycentre - first.barycentre))
    barycentre_drift = displacement / first.width if first.width > 0 else displacement
    norm_drift = max(
        abs(s.norm_sq - first.norm_sq) / first.norm_sq for s in snapshots
    )
    return {
        "width_drift": width_drift,
        "barycentre_drift": barycentre_drift,
        "norm_drift": norm_drift,
    }
