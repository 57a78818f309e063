"""Flat key-value experiment configuration.

Grammar: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored. Keys are dotted section paths (``grid.n``). Unknown keys are
hard errors, not warnings: silent misconfiguration is the top
reproducibility hazard. Values are typed by the experiment schema below;
vectors are space-separated numbers and position lists are
semicolon-separated triples.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

EXPERIMENT_KINDS = (
    "ground-state",
    "evolve",
    "dbb-ensemble",
    "effective-gravity",
    "droplet",
)


@dataclass(frozen=True)
class Key:
    name: str
    kind: str  # int | float | str | vec3 | floats | triples
    required: bool = False
    default: object = None
    choices: tuple | None = None


_COMMON = [
    Key("experiment", "str", required=True, choices=EXPERIMENT_KINDS),
    Key("output.dir", "str", required=True),
]

# Explicit seed is mandatory wherever randomness enters (ensemble sampling);
# elsewhere it defaults and is merely echoed.
_SEED_OPTIONAL = [Key("seed", "int", default=0)]
_SEED_REQUIRED = [Key("seed", "int", required=True)]

_GRID = [
    Key("grid.n", "int", required=True),
    Key("grid.box_length", "float", required=True),
]

_KERNEL = [
    Key("kernel.kind", "str", default="coulomb",
        choices=("coulomb", "yukawa", "none")),
    Key("kernel.coupling", "float", default=1.0),
    Key("kernel.screening_length", "float"),
]

SCHEMAS = {
    "ground-state": _COMMON + _SEED_OPTIONAL + _GRID + _KERNEL + [
        Key("solver.norm", "float", default=1.0),
        Key("solver.tol", "float", default=1e-8),
        Key("solver.max_iterations", "int", default=200_000),
    ],
    "evolve": _COMMON + _SEED_OPTIONAL + _GRID + _KERNEL + [
        Key("init.kind", "str", default="gaussian",
            choices=("gaussian", "ground-state")),
        Key("init.width", "float"),
        Key("init.norm", "float", default=1.0),
        Key("solver.tol", "float", default=1e-8),
        Key("potential.kind", "str", default="none",
            choices=("none", "uniform", "linear", "harmonic")),
        Key("potential.value", "float", default=0.0),
        Key("potential.gradient", "vec3", default=(0.0, 0.0, 0.0)),
        Key("potential.omega", "float", default=0.0),
        Key("evolution.dt", "float", required=True),
        Key("evolution.t_end", "float", required=True),
        Key("evolution.snapshot_stride", "int", default=1),
    ],
    "dbb-ensemble": _COMMON + _SEED_REQUIRED + _GRID + [
        Key("pilot.separation", "float", required=True),
        Key("pilot.width", "float", required=True),
        Key("pilot.speed", "float", default=0.0),
        Key("evolution.dt", "float", required=True),
        Key("evolution.t_end", "float", required=True),
        Key("evolution.snapshot_stride", "int", default=1),
        Key("ensemble.size", "int", required=True),
        Key("ensemble.csv_limit", "int", default=10),
        Key("ensemble.bins", "int", default=20),
    ],
    "effective-gravity": _COMMON + _SEED_OPTIONAL + _GRID + [
        Key("sources.positions", "triples", required=True),
        Key("sources.L", "floats", required=True),
        Key("sources.sigma_s", "float"),
        Key("fit.r_min", "float"),
        Key("fit.r_max", "float"),
    ],
    "droplet": _COMMON + _SEED_OPTIONAL + [
        Key("forcing.frequency", "float", required=True),
        Key("forcing.wave_speed", "float", required=True),
        Key("droplet.task", "str", required=True,
            choices=("zones", "equilibria", "orbit")),
        Key("zones.r_max", "float"),
        Key("pair.mass_a", "float", default=1.0),
        Key("pair.mass_b", "float", default=1.0),
        Key("pair.length_a", "float", default=1.0),
        Key("pair.length_b", "float", default=1.0),
        Key("orbit.r_max", "float"),
        Key("orbit.t_end", "float"),
        Key("orbit.dt", "float"),
        Key("orbit.record_stride", "int", default=1),
        Key("orbit.x1", "vec3"),
        Key("orbit.x2", "vec3"),
        Key("orbit.v1", "vec3", default=(0.0, 0.0, 0.0)),
        Key("orbit.v2", "vec3", default=(0.0, 0.0, 0.0)),
    ],
}


def parse_config_file(path):
    """Read a config file into a raw string dict; reject duplicates."""
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            if key in raw:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value
    return raw


def _convert(key, text):
    try:
        if key.kind == "int":
            return int(text)
        if key.kind == "float":
            return float(text)
        if key.kind == "str":
            return text
        if key.kind == "vec3":
            parts = tuple(float(p) for p in text.split())
            if len(parts) != 3:
                raise ValueError("expected 3 components")
            return parts
        if key.kind == "floats":
            return tuple(float(p) for p in text.split())
        if key.kind == "triples":
            triples = []
            for chunk in text.split(";"):
                parts = tuple(float(p) for p in chunk.split())
                if len(parts) != 3:
                    raise ValueError("each position needs 3 components")
                triples.append(parts)
            return tuple(triples)
    except ValueError as exc:
        raise ConfigError(f"key {key.name!r}: cannot parse {text!r} ({exc})") from exc
    raise ConfigError(f"internal: unknown kind {key.kind!r}")


def resolve(raw):
    """Validate a raw dict against its experiment schema.

    Returns the fully resolved config (defaults filled). Raises
    :class:`ConfigError` for unknown keys, missing required keys, or
    malformed values.
    """
    kind = raw.get("experiment")
    if kind is None:
        raise ConfigError("missing required key 'experiment'")
    if kind not in SCHEMAS:
        raise ConfigError(
            f"unknown experiment {kind!r}; expected one of {EXPERIMENT_KINDS}"
        )
    schema = {k.name: k for k in SCHEMAS[kind]}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {kind!r}: {', '.join(unknown)}")
    resolved = {}
    for key in schema.values():
        if key.name in raw:
            value = _convert(key, raw[key.name])
            if key.choices is not None and value not in key.choices:
                raise ConfigError(
                    f"key {key.name!r}: {value!r} not in {key.choices}"
                )
            resolved[key.name] = value
        elif key.required:
            raise ConfigError(f"missing required key {key.name!r}")
        elif key.default is not None:
            resolved[key.name] = key.default
    if "seed" in resolved:
        seed = resolved["seed"]
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
    return resolved


def check_invariants(cfg):
    """Cheap cross-key invariant checks (no computation); returns notes.

    Raises :class:`ConfigError` naming the offending key.
    """
    kind = cfg["experiment"]
    notes = []
    if "grid.n" in cfg:
        n, box = cfg["grid.n"], cfg["grid.box_length"]
        if n < 8 or n % 2:
            raise ConfigError("grid.n: must be an even integer >= 8")
        if box <= 0:
            raise ConfigError("grid.box_length: must be positive")
        spacing = box / n
        notes.append(f"grid spacing = {spacing!r}")
        if "evolution.dt" in cfg:
            if abs(cfg["evolution.dt"]) >= spacing**2:
                raise ConfigError(
                    f"evolution.dt: must stay below spacing^2 = {spacing**2!r}"
                )
    if cfg.get("kernel.kind") == "yukawa" and not cfg.get("kernel.screening_length"):
        raise ConfigError("kernel.screening_length: required for yukawa kernel")
    if kind == "effective-gravity":
        sigma = cfg.get("sources.sigma_s")
        if sigma is None:
            sigma = 2.0 * cfg["grid.box_length"] / cfg["grid.n"]
            notes.append(f"sources.sigma_s defaulted to 2*spacing = {sigma!r}")
        if len(cfg["sources.positions"]) != len(cfg["sources.L"]):
            raise ConfigError("sources.L: length must match sources.positions")
        pos = np.asarray(cfg["sources.positions"])
        box = cfg["grid.box_length"]
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                d = np.remainder(pos[i] - pos[j] + box / 2.0, box) - box / 2.0
                if float(np.linalg.norm(d)) <= 4.0 * sigma:
                    raise ConfigError(
                        f"sources.positions: SourceOverlap between sources {i} "
                        f"and {j} (separation <= 4 sigma_s = {4 * sigma!r})"
                    )
    if kind == "droplet":
        task = cfg["droplet.task"]
        if task == "zones" and cfg.get("zones.r_max") is None:
            raise ConfigError("zones.r_max: required for the zones task")
        if task == "equilibria" and cfg.get("orbit.r_max") is None:
            raise ConfigError("orbit.r_max: required for the equilibria task")
        if task == "orbit":
            for req in ("orbit.t_end", "orbit.dt", "orbit.x1", "orbit.x2"):
                if cfg.get(req) is None:
                    raise ConfigError(f"{req}: required for the orbit task")
    if kind == "dbb-ensemble" and cfg["ensemble.size"] < 1:
        raise ConfigError("ensemble.size: must be positive")
    return notes
