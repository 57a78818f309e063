"""Experiment pipelines behind the CLI: compute, then write data products.

Every product is numeric-deterministic for a fixed config and seed: floats
are serialized with ``repr`` (shortest round-trip form), JSON keys are
sorted, and no timestamps enter numerical outputs. Products are written to a
temporary area first and only moved into the output directory when the whole
run succeeded.
"""

import hashlib
import json
import os
import shutil
import tempfile
import time

import numpy as np

from . import __version__, backend
from .config import check_invariants
from .errors import ConfigError
from .evolution import EvolutionConfig, ExternalPotential, evolve_nls, \
    evolve_linear_pilot, stability_report
from .grid import ComplexField, GridSpec, RealField, l2_norm_sq, write_field
from .ground_state import SolverOptions, solve_choquard
from .guidance import integrate_trajectory, sample_from_density, \
    write_trajectory_csv, Trajectory
from .kernels import COULOMB, YUKAWA, KernelSpec
from .effective_gravity import SourceModel, fit_newtonian, solve_effective_potential
from .droplets import DropletPair, ForcingSpec, classify_zones, orbit_equilibria, \
    simulate_orbit, total_energy


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _grid_spec(cfg):
    return GridSpec(cfg["grid.n"], cfg["grid.box_length"])


def _kernel(cfg):
    kind = cfg.get("kernel.kind", "none")
    if kind == "none":
        return None
    if kind == COULOMB:
        return KernelSpec(COULOMB, coupling=cfg["kernel.coupling"])
    if kind == YUKAWA:
        return KernelSpec(
            YUKAWA,
            coupling=cfg["kernel.coupling"],
            screening_length=cfg["kernel.screening_length"],
        )
    raise ConfigError(f"kernel.kind: unsupported {kind!r}")


def _gaussian_state(spec, width, norm):
    x = spec.axis_coordinates()
    g = np.exp(-(x**2) / (4.0 * width**2))
    psi = g[:, None, None] * g[None, :, None] * g[None, None, :]
    psi = psi.astype(np.complex128)
    field = ComplexField(spec, psi, check=False)
    field.values *= np.sqrt(norm / l2_norm_sq(field))
    return field


def _external_potential(cfg):
    kind = cfg["potential.kind"]
    if kind == "none":
        return None
    if kind == "uniform":
        return ExternalPotential.uniform(cfg["potential.value"])
    if kind == "linear":
        return ExternalPotential.linear(cfg["potential.gradient"])
    if kind == "harmonic":
        return ExternalPotential.harmonic(cfg["potential.omega"])
    raise ConfigError(f"potential.kind: unsupported {kind!r}")


def _run_ground_state(cfg, out):
    spec = _grid_spec(cfg)
    kernel = _kernel(cfg)
    if kernel is None:
        raise ConfigError("kernel.kind: ground state needs a nonzero kernel")
    opts = SolverOptions(
        tol=cfg["solver.tol"], max_iterations=cfg["solver.max_iterations"]
    )
    result = solve_choquard(spec, kernel, cfg["solver.norm"], opts)
    _write_json(os.path.join(out, "ground_state.json"), result.scalars())
    write_field(os.path.join(out, "profile.sgs"), result.phi)
    return ["ground_state.json", "profile.sgs"]


def _series_manifest(snapshots):
    return {
        "times": [s.time for s in snapshots],
        "norms": [s.norm_sq for s in snapshots],
        "widths": [s.width for s in snapshots],
        "barycentres": [[float(c) for c in s.barycentre] for s in snapshots],
    }


def _run_evolve(cfg, out):
    spec = _grid_spec(cfg)
    kernel = _kernel(cfg)
    width = cfg.get("init.width") or spec.box_length / 12.0
    if cfg["init.kind"] == "ground-state":
        if kernel is None:
            raise ConfigError("init.kind: ground-state start needs a kernel")
        psi0 = ComplexField(
            spec,
            solve_choquard(
                spec, kernel, cfg["init.norm"], SolverOptions(tol=cfg["solver.tol"])
            ).phi.values.astype(np.complex128),
            check=False,
        )
    else:
        psi0 = _gaussian_state(spec, width, cfg["init.norm"])
    evo = EvolutionConfig(
        dt=cfg["evolution.dt"],
        t_end=cfg["evolution.t_end"],
        snapshot_stride=cfg["evolution.snapshot_stride"],
        external_potential=_external_potential(cfg),
    )
    snapshots = evolve_nls(psi0, kernel, evo)
    products = []
    for i, snap in enumerate(snapshots):
        name = f"snapshot_{i:04d}.sgs"
        write_field(os.path.join(out, name), snap.psi)
        products.append(name)
    _write_json(os.path.join(out, "series.json"), _series_manifest(snapshots))
    _write_json(os.path.join(out, "stability.json"), stability_report(snapshots))
    return products + ["series.json", "stability.json"]


def _run_dbb_ensemble(cfg, out):
    spec = _grid_spec(cfg)
    sep = cfg["pilot.separation"]
    width = cfg["pilot.width"]
    speed = cfg["pilot.speed"]
    x = spec.axis_coordinates()
    g1 = np.exp(-((x - sep / 2.0) ** 2) / (4.0 * width**2))
    g2 = np.exp(-((x + sep / 2.0) ** 2) / (4.0 * width**2))
    gy = np.exp(-(x**2) / (4.0 * width**2))
    kx = np.exp(-1j * speed * x)
    lobe1 = (g1 * kx)[:, None, None]
    lobe2 = (g2 * kx.conj())[:, None, None]
    psi = (lobe1 + lobe2) * gy[None, :, None] * gy[None, None, :]
    psi0 = ComplexField(spec, psi, check=False)
    psi0.values /= np.sqrt(l2_norm_sq(psi0))

    evo = EvolutionConfig(
        dt=cfg["evolution.dt"],
        t_end=cfg["evolution.t_end"],
        snapshot_stride=cfg["evolution.snapshot_stride"],
    )
    snapshots = evolve_linear_pilot(psi0, evo)
    rng = np.random.default_rng(cfg["seed"])
    starts = sample_from_density(psi0, cfg["ensemble.size"], rng)
    traj = integrate_trajectory(snapshots, starts)

    final = traj.positions[-1]
    with open(os.path.join(out, "final_positions.csv"), "w") as fh:
        fh.write("x,y,z\n")
        for row in final:
            fh.write(f"{row[0]!r},{row[1]!r},{row[2]!r}\n")

    limit = min(cfg["ensemble.csv_limit"], traj.n_particles)
    sub = Trajectory(
        times=traj.times,
        positions=traj.positions[:, :limit, :],
        velocities=traj.velocities[:, :limit, :],
    )
    write_trajectory_csv(os.path.join(out, "trajectories.csv"), sub)

    stats = equivariance_statistic(
        snapshots[-1].psi, final[:, 0], n_bins=cfg["ensemble.bins"]
    )
    _write_json(os.path.join(out, "equivariance.json"), stats)
    _write_json(os.path.join(out, "series.json"), _series_manifest(snapshots))
    return ["final_positions.csv", "trajectories.csv", "equivariance.json",
            "series.json"]


def equivariance_statistic(psi, samples_x, n_bins=20):
    """Chi-square comparison of sampled x positions against the grid marginal.

    Bins span the central 99.9% of the marginal; tail mass folds into the
    edge bins. Returns the statistic, degrees of freedom, and p-value.
    """
    from scipy.stats import chi2

    spec = psi.spec
    dens = psi.values.real**2 + psi.values.imag**2
    marginal = dens.sum(axis=(1, 2))
    marginal = marginal / marginal.sum()
    xs = spec.axis_coordinates()
    cdf = np.cumsum(marginal)
    lo = xs[np.searchsorted(cdf, 0.0005)]
    hi = xs[np.searchsorted(cdf, 0.9995)]
    edges = np.linspace(lo, hi, n_bins + 1)

    # expected mass per bin from the piecewise-constant marginal; tail mass
    # folds into the edge bins so the bins form a complete partition
    h = spec.spacing
    cell_lo = xs - h / 2.0
    cell_hi = xs + h / 2.0
    expected = np.zeros(n_bins)
    for b in range(n_bins):
        overlap = np.clip(
            np.minimum(cell_hi, edges[b + 1]) - np.maximum(cell_lo, edges[b]),
            0.0, None,
        )
        expected[b] = np.sum(marginal * overlap / h)
    expected[0] += np.sum(marginal * np.clip(edges[0] - cell_lo, 0.0, h) / h)
    expected[-1] += np.sum(marginal * np.clip(cell_hi - edges[-1], 0.0, h) / h)
    expected *= len(samples_x)

    counts, _ = np.histogram(
        np.clip(samples_x, edges[0], edges[-1]), bins=edges
    )
    counts = counts.astype(np.float64)

    stat = float(np.sum((counts - expected) ** 2 / expected))
    dof = n_bins - 1
    return {
        "chi_square": stat,
        "dof": dof,
        "p_value": float(chi2.sf(stat, dof)),
        "bin_edges": [float(e) for e in edges],
        "counts": [float(c) for c in counts],
        "expected": [float(e) for e in expected],
    }


def _run_effective_gravity(cfg, out):
    spec = _grid_spec(cfg)
    sigma = cfg.get("sources.sigma_s") or 2.0 * spec.spacing
    model = SourceModel(
        positions=cfg["sources.positions"], L_values=cfg["sources.L"], sigma_s=sigma
    )
    phi = solve_effective_potential(model, spec)
    r_min = cfg.get("fit.r_min") or 4.0 * sigma
    r_max = cfg.get("fit.r_max") or spec.box_length / 4.0
    fit = fit_newtonian(phi, model, (r_min, r_max))
    _write_json(os.path.join(out, "fit.json"), fit.scalars())
    write_field(os.path.join(out, "potential.sgs"), phi)
    products = ["fit.json", "potential.sgs"]
    for i, profile in enumerate(fit.shell_profiles):
        name = f"shells_source{i}.csv"
        with open(os.path.join(out, name), "w") as fh:
            fh.write("r,phi_avg,phi_fit\n")
            for r, avg, fv in profile:
                fh.write(f"{r!r},{avg!r},{fv!r}\n")
        products.append(name)
    return products


def _run_droplet(cfg, out):
    spec = ForcingSpec(cfg["forcing.frequency"], cfg["forcing.wave_speed"])
    task = cfg["droplet.task"]
    pair = DropletPair(
        cfg["pair.mass_a"], cfg["pair.mass_b"],
        cfg["pair.length_a"], cfg["pair.length_b"],
    )
    if task == "zones":
        zones = classify_zones(spec, cfg["zones.r_max"])
        _write_json(
            os.path.join(out, "zones.json"),
            {
                "faraday_wavelength": spec.faraday_wavelength,
                "wavenumber": spec.wavenumber,
                "zones": [
                    {"r_lo": z[0][0], "r_hi": z[0][1], "kind": z[1]} for z in zones
                ],
            },
        )
        return ["zones.json"]
    if task == "equilibria":
        result = orbit_equilibria(pair, spec, cfg["orbit.r_max"])
        payload = result.scalars()
        payload["faraday_wavelength"] = spec.faraday_wavelength
        _write_json(os.path.join(out, "equilibria.json"), payload)
        return ["equilibria.json"]
    # orbit simulation
    positions = np.array([cfg["orbit.x1"], cfg["orbit.x2"]])
    velocities = np.array([cfg["orbit.v1"], cfg["orbit.v2"]])
    e0 = total_energy(pair, spec, positions, velocities)
    traj = simulate_orbit(
        pair, spec, positions, velocities,
        cfg["orbit.t_end"], cfg["orbit.dt"], cfg["orbit.record_stride"],
    )
    write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj)
    e1 = total_energy(pair, spec, traj.positions[-1], traj.velocities[-1])
    _write_json(
        os.path.join(out, "orbit_summary.json"),
        {
            "initial_energy": e0,
            "final_energy": e1,
            "relative_energy_drift": abs(e1 - e0) / abs(e0) if e0 else 0.0,
            "final_separation": float(
                np.linalg.norm(traj.positions[-1][0] - traj.positions[-1][1])
            ),
        },
    )
    return ["trajectory.csv", "orbit_summary.json"]


_RUNNERS = {
    "ground-state": _run_ground_state,
    "evolve": _run_evolve,
    "dbb-ensemble": _run_dbb_ensemble,
    "effective-gravity": _run_effective_gravity,
    "droplet": _run_droplet,
}


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run(cfg):
    """Execute one experiment; returns the list of written product paths.

    Products land in ``cfg['output.dir']`` only if the whole run succeeds
    (staged through a temporary directory otherwise discarded). A
    ``manifest.json`` with the config echo, versions, timings, and product
    checksums is written last.
    """
    check_invariants(cfg)
    out_dir = cfg["output.dir"]
    parent = os.path.dirname(os.path.abspath(out_dir)) or "."
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".sgs-run-", dir=parent)
    t0 = time.perf_counter()
    try:
        products = _RUNNERS[cfg["experiment"]](cfg, tmp)
        elapsed = time.perf_counter() - t0
        manifest = {
            "config": {k: _json_safe(v) for k, v in cfg.items()},
            "version": __version__,
            "backend": backend.backend_name(),
            "elapsed_seconds": elapsed,
            "checksums": {name: _sha256(os.path.join(tmp, name))
                          for name in products},
        }
        _write_json(os.path.join(tmp, "manifest.json"), manifest)
        os.makedirs(out_dir, exist_ok=True)
        written = []
        for name in products + ["manifest.json"]:
            dest = os.path.join(out_dir, name)
            os.replace(os.path.join(tmp, name), dest)
            written.append(dest)
        return written
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def _json_safe(value):
    if isinstance(value, tuple):
        return [_json_safe(v) for v in value]
    return value


def validate(cfg):
    """Dry-run check; returns the resolved config echo plus invariant notes."""
    notes = check_invariants(cfg)
    return {
        "status": "ok",
        "resolved": {k: _json_safe(v) for k, v in sorted(cfg.items())},
        "notes": notes,
    }
