"""Flat key-value experiment configs with strict per-subcommand schemas.

Format: one ``key = value`` per line, ``#`` comments, no sections.
Unknown keys, duplicates, missing required keys and type errors all raise
``ConfigError`` (CLI exit code 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class InvariantViolation(RuntimeError):
    """A post-run invariant check failed (CLI exit code 2)."""

    def __init__(self, name, detail=""):
        self.invariant = name
        super().__init__(f"invariant violated: {name}" + (f" ({detail})" if detail else ""))


_REQUIRED = object()


def _key(name, typ, default=_REQUIRED):
    return name, (typ, default)


SCHEMAS = {
    "ot": dict(
        [
            _key("task", str, "solve"),
            _key("source", str),  # CSV path or "random <n> <dim>"
            _key("target", str),
            _key("cycles", int, 1000),
            _key("marginal_tolerance", float, 1e-9),
            _key("gap_tolerance", float, 1e-8),
        ]
    ),
    "iso": dict(
        [
            _key("task", str, "bound"),  # bound | chain
            _key("shape", str),
            _key("resolution", int, 32),
        ]
    ),
    "scl": dict(
        [
            _key("task", str, "evolve"),  # evolve | compare
            _key("flux", str, "burgers"),
            _key("initial", str),  # "riemann uL uR xj" | "sine m a" | CSV path
            _key("cells", int, 200),
            _key("n_levels", int, 32),
            _key("T", float, 0.3),
            _key("dt_factor", float, 1.0),  # dt = dt_factor * cell_width / L
            _key("snapshot_every", int, 0),  # 0: first and last only
            _key("refinements", int, 3),  # compare task
            _key("level_mass_tolerance", float, 1e-12),
        ]
    ),
    "euler": dict(
        [
            _key("task", str, "maximizer"),
            _key("omega", float, 1.0),
            _key("t0", float, 0.0),
            _key("t1", float, 1.0),
            _key("grid_nodes", int, 64),
            _key("n_times", int, 9),
            _key("endpoints", int, 200),
            _key("perturbations", int, 20),
            _key("amplitude", float, 0.1),
            _key("n_seg", int, 16),
        ]
    ),
    "abi": dict(
        [
            _key("task", str, "evolve"),
            _key("profile", str, "rest"),
            _key("cells", int, 100),
            _key("T", float, 0.1),
            _key("cfl", float, 0.9),
            _key("snapshot_every", int, 0),
            _key("conservation_tolerance", float, 1e-12),
            _key("entropy_tolerance", float, 1e-10),
        ]
    ),
}

for schema in SCHEMAS.values():
    schema["seed"] = (int, 0)


@dataclass
class ExperimentConfig:
    subcommand: str
    parameters: dict
    seed: int
    output_dir: str
    raw: dict = field(default_factory=dict)


def parse_flat_file(path):
    """Read ``key = value`` lines; duplicates rejected."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in text.split("=", 1))
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


def build_config(subcommand, raw, output_dir, seed_override=None):
    """Validate raw strings against the subcommand schema."""
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    schema = SCHEMAS[subcommand]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {subcommand}: {', '.join(unknown)}")
    params = {}
    for key, (typ, default) in schema.items():
        if key in raw:
            try:
                params[key] = typ(raw[key])
            except ValueError as exc:
                raise ConfigError(f"key {key!r}: {exc}") from exc
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r} for {subcommand}")
        else:
            params[key] = default
    seed = int(seed_override) if seed_override is not None else params.pop("seed")
    params.pop("seed", None)
    return ExperimentConfig(
        subcommand=subcommand,
        parameters=params,
        seed=seed,
        output_dir=output_dir,
        raw=dict(raw),
    )
