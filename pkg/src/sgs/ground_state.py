"""Self-bound soliton ground states by constrained energy minimization.

The soliton minimizes ``E = T + V`` with ``T = 1/2 int |grad phi|^2`` and
``V = 1/2 int phi^2 * convolve_potential(phi^2)`` at fixed squared L2 norm N
(hbar = m = 1, the kernel coupling absorbing the gravitational prefactor).
Minimization is normalized gradient descent in imaginary time:

    phi <- normalize(phi - tau * (-1/2 laplacian(phi) + V_nl * phi))

with tau adapted to keep the energy non-increasing. Convergence is declared
on the relative eigen-residual ``||H phi - E_g phi|| / ||H phi||`` where
``E_g = <phi, H phi> / <phi, phi>``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MaxIterationsExceeded, WidthTooLarge
from .grid import (
    GridSpec,
    RealField,
    barycentre,
    fftn,
    ifftn,
    k_squared,
    rms_radius,
)
from .kernels import KernelSpec, convolve_potential

# Energy may rise by round-off between accepted steps; tolerated band,
# relative to |E|. Safe only because the step cap sits below the spectral
# stability bound, so no mode can amplify between evaluations.
ENERGY_BACKSLIDE_TOL = 1e-12


def _stable_step_cap(spec):
    # Descent diverges through the top kinetic mode once
    # tau > 2 / lambda_max with lambda_max ~ max|k|^2 / 2; keep a 10% margin.
    # (The naive spacing^2/4 cap is a 1D bound; in 3D max|k|^2 is three times
    # larger and spacing^2/4 sits above the stability edge.)
    return 3.6 / float(k_squared(spec).max())


@dataclass
class SolverOptions:
    tol: float = 1e-8
    max_iterations: int = 200_000
    initial_guess: RealField | None = None
    record_energy: bool = False


@dataclass
class GroundStateResult:
    """Converged soliton with its energy decomposition and diagnostics."""

    phi: RealField
    eigenvalue: float
    kinetic: float
    potential: float
    total_energy: float
    width: float
    iterations: int
    residual: float
    energy_history: np.ndarray | None = field(default=None, repr=False)

    def scalars(self):
        """JSON-ready scalar summary (the profile goes to a grid dump)."""
        return {
            "eigenvalue": self.eigenvalue,
            "kinetic": self.kinetic,
            "potential": self.potential,
            "total_energy": self.total_energy,
            "width": self.width,
            "iterations": self.iterations,
            "residual": self.residual,
        }


class _FlowState:
    """One full evaluation of the flow at a normalized profile."""

    __slots__ = ("phi", "h_phi", "kinetic", "potential", "energy",
                 "eigenvalue", "residual")

    def __init__(self, phi, spec, kernel, dv):
        k2 = k_squared(spec)
        phik = fftn(phi)
        lap = ifftn(phik * (-k2)).real
        rho = phi * phi
        v_nl = convolve_potential(RealField(spec, rho, check=False), kernel).values
        self.phi = phi
        self.h_phi = -0.5 * lap + v_nl * phi
        n3 = spec.n_per_axis**3
        self.kinetic = 0.5 * float(np.sum(k2 * np.abs(phik) ** 2)) * dv / n3
        self.potential = 0.5 * float(np.sum(rho * v_nl)) * dv
        self.energy = self.kinetic + self.potential
        norm_sq = float(np.sum(rho)) * dv
        self.eigenvalue = float(np.sum(phi * self.h_phi)) * dv / norm_sq
        res = self.h_phi - self.eigenvalue * phi
        h_norm = np.linalg.norm(self.h_phi)
        self.residual = float(np.linalg.norm(res) / h_norm) if h_norm > 0 else 0.0


def _normalized(values, norm, dv):
    return values * np.sqrt(norm / (float(np.sum(values * values)) * dv))


def energy_functional(phi, kernel):
    """Kinetic, potential, and total energy of a real profile.

    The 1/2 in the potential term avoids double counting the pair
    interaction. Kinetic energy is evaluated in wavenumber space (Parseval).

    Returns
    -------
    (T, V, E) : floats with E = T + V
    """
    spec = phi.spec
    dv = spec.cell_volume
    v = phi.values
    if not np.any(v):
        return 0.0, 0.0, 0.0
    phik = fftn(v)
    kinetic = 0.5 * float(np.sum(k_squared(spec) * np.abs(phik) ** 2)) * dv \
        / spec.n_per_axis**3
    rho = v * v
    v_nl = convolve_potential(RealField(spec, rho, check=False), kernel).values
    potential = 0.5 * float(np.sum(rho * v_nl)) * dv
    return kinetic, potential, kinetic + potential


def solve_choquard(spec, kernel, norm, opts=None):
    """Ground-state soliton of squared norm ``norm`` on the given grid.

    Starts from a norm-matched Gaussian of width ``box_length / 12`` (inside
    the basin of the unique minimizer) unless ``opts.initial_guess`` is set.
    The step halves whenever the energy would rise and grows 10% on success,
    capped at ``spacing^2 / 4``.

    Raises
    ------
    MaxIterationsExceeded
        No convergence within ``opts.max_iterations``.
    WidthTooLarge
        Converged width exceeds ``box_length / 8`` (untrusted result).
    """
    if opts is None:
        opts = SolverOptions()
    if not norm > 0:
        raise ValueError("norm must be positive")
    dv = spec.cell_volume

    if opts.initial_guess is not None:
        phi = opts.initial_guess.values.astype(np.float64).copy()
    else:
        x = spec.axis_coordinates()
        w0 = spec.box_length / 12.0
        g = np.exp(-(x**2) / (4.0 * w0**2))
        phi = g[:, None, None] * g[None, :, None] * g[None, None, :]
    phi = _normalized(phi, norm, dv)

    tau_cap = _stable_step_cap(spec)
    tau = tau_cap
    state = _FlowState(phi, spec, kernel, dv)
    history = [state.energy] if opts.record_energy else None

    iterations = 0
    converged = False
    while iterations < opts.max_iterations:
        iterations += 1
        candidate = _normalized(state.phi - tau * state.h_phi, norm, dv)
        cand = _FlowState(candidate, spec, kernel, dv)
        if cand.energy <= state.energy + ENERGY_BACKSLIDE_TOL * abs(state.energy):
            state = cand
            tau = min(tau * 1.1, tau_cap)
            if history is not None:
                history.append(state.energy)
            if state.residual < opts.tol:
                converged = True
                break
        else:
            tau *= 0.5
            if tau < 1e-18:
                break
    if not converged:
        raise MaxIterationsExceeded(
            f"no convergence after {iterations} iterations "
            f"(residual {state.residual:.3e}, tol {opts.tol:.1e})"
        )

    # The converged tail may carry round-off-level negatives; project back
    # onto the nonnegative cone and renormalize.
    phi = state.phi
    if phi.min() < -1e-8 * phi.max():
        raise MaxIterationsExceeded(
            "converged profile has significant negative values; not a ground state"
        )
    phi = _normalized(np.maximum(phi, 0.0), norm, dv)
    state = _FlowState(phi, spec, kernel, dv)

    rho = phi * phi
    width = rms_radius(rho, spec, barycentre(rho, spec))
    if width > spec.box_length / 8.0:
        raise WidthTooLarge(
            f"soliton width {width:.3g} exceeds box/8 = {spec.box_length / 8:.3g}"
        )
    return GroundStateResult(
        phi=RealField(spec, phi, check=False),
        eigenvalue=state.eigenvalue,
        kinetic=state.kinetic,
        potential=state.potential,
        total_energy=state.energy,
        width=width,
        iterations=iterations,
        residual=state.residual,
        energy_history=np.asarray(history) if history is not None else None,
    )


@dataclass
class ScalingSweepResult:
    norms: np.ndarray
    energies: np.ndarray
    widths: np.ndarray
    energy_exponent: float  # E ~ -N**a
    width_exponent: float   # width ~ N**b

    def rows(self):
        return [
            {"norm": float(n), "total_energy": float(e), "width": float(w)}
            for n, e, w in zip(self.norms, self.energies, self.widths)
        ]


def scaling_sweep(kernel, norms, base_spec, opts=None):
    """Ground-state energy and width across norms, with fitted power laws.

    ``base_spec`` should resolve the soliton at ``norms[0]``; the box is
    rescaled as ``norms[0] / N`` for the other entries (soliton extent scales
    like 1/N), and each solve warm-starts from the previous solution mapped
    through the exact scaling covariance.
    """
    if opts is None:
        opts = SolverOptions()
    norms = np.asarray(sorted(norms), dtype=np.float64)
    energies, widths = [], []
    prev = None
    for n_val in norms:
        spec_n = GridSpec(base_spec.n_per_axis, base_spec.box_length * norms[0] / n_val)
        guess = None
        if prev is not None:
            s = n_val / prev[0]
            guess = RealField(spec_n, prev[1].phi.values * s**2, check=False)
        run_opts = SolverOptions(
            tol=opts.tol, max_iterations=opts.max_iterations, initial_guess=guess
        )
        result = solve_choquard(spec_n, kernel, float(n_val), run_opts)
        energies.append(result.total_energy)
        widths.append(result.width)
        prev = (n_val, result)
    energies = np.asarray(energies)
    widths = np.asarray(widths)
    log_n = np.log(norms)
    a = float(np.polyfit(log_n, np.log(-energies), 1)[0])
    b = float(np.polyfit(log_n, np.log(widths), 1)[0])
    return ScalingSweepResult(norms, energies, widths, a, b)
