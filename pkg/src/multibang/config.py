"""Flat key-value experiment configuration.

Format: one `key = value` per line, `#` starts a comment, blank lines
are ignored.  Unknown keys are rejected with a line-anchored message.
Lists (phases, offset frequencies) are comma-separated floats.  The
`seed` key is mandatory and feeds every random element of a run.
"""

import math
from dataclasses import dataclass, fields

import numpy as np

from . import elasticity as fem
from .bloch import BlochProblem
from .penalties import PenaltyModel
from .sets import ConcentricSet, RadialSet
from .ssn import ContinuationSchedule, NewtonConfig


class ConfigError(ValueError):
    pass


def _parse_float_list(text):
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_bool(text):
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {text}")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    penalty: str
    alpha: float
    seed: int
    # radial geometry
    omega0: float = 1.0
    phases: tuple = ()
    # pulse design
    omegas: tuple = ()
    duration: float = 5.0
    n_steps: int = 1000
    target: str = ""
    target_index: int = 1
    gyro: float = 267.51
    field_strength: float = 1e-2
    # elasticity
    nx: int = 129
    ny: int = 129
    modulus: float = 20.0
    poisson: float = 0.3
    rotation_angle: float = math.pi / 2
    deadload_magnitude: float = 1.0
    deadload_noise: float = 0.0  # relative to max |z|
    # continuation and Newton
    gamma0: float = 1e2
    gamma_factor: float = 0.5
    gamma_min: float = 1e-10
    tol_abs: float = 1e-7
    tol_rel: float = 1e-7
    max_newton: int = 0  # 0: model default (500 pulse / 50 elasticity)
    krylov_tol: float = 1e-10
    krylov_max: int = 1000
    ls_max: int = 30
    output_dir: str = ""

    def __post_init__(self):
        if self.model not in ("bloch", "elasticity"):
            raise ConfigError(f"model must be bloch or elasticity, got {self.model!r}")
        if self.penalty not in ("radial", "concentric"):
            raise ConfigError(f"penalty must be radial or concentric, got {self.penalty!r}")
        if self.model == "bloch" and self.penalty != "radial":
            raise ConfigError("the pulse design model requires the radial penalty")
        if self.penalty == "radial" and len(self.phases) < 3:
            raise ConfigError("radial penalty needs at least 3 phases")
        if self.model == "bloch":
            if not self.omegas:
                raise ConfigError("pulse design needs offset frequencies (omegas)")
            if self.target not in ("saturated", "single"):
                raise ConfigError("bloch target must be saturated or single")
            if self.target == "single" and not 1 <= self.target_index <= len(self.omegas):
                raise ConfigError("target_index out of range")
        else:
            if self.target not in ("rotation", "deadload"):
                raise ConfigError("elasticity target must be rotation or deadload")

    # -- builders -----------------------------------------------------------

    def build_penalty(self):
        if self.penalty == "radial":
            return PenaltyModel(RadialSet(self.omega0, np.array(self.phases)), self.alpha)
        return PenaltyModel(ConcentricSet(), self.alpha)

    def build_schedule(self):
        return ContinuationSchedule(self.gamma0, self.gamma_factor, self.gamma_min)

    def build_newton_config(self):
        default = 500 if self.model == "bloch" else 50
        return NewtonConfig(
            tol_abs=self.tol_abs,
            tol_rel=self.tol_rel,
            max_iter=self.max_newton or default,
            krylov_tol=self.krylov_tol,
            krylov_max=self.krylov_max,
            ls_max=self.ls_max,
        )

    def build_bloch_problem(self):
        nj = len(self.omegas)
        targets = np.tile([0.0, 0.0, 1.0], (nj, 1))
        if self.target == "saturated":
            targets[:] = [1.0, 0.0, 0.0]
        else:
            targets[self.target_index - 1] = [1.0, 0.0, 0.0]
        return BlochProblem(
            omegas=np.array(self.omegas),
            duration=self.duration,
            n_steps=self.n_steps,
            targets=targets,
            gyro=self.gyro,
            field_strength=self.field_strength,
        )

    def build_elasticity_system(self, rng=None):
        mesh = fem.StructuredMesh(self.nx, self.ny)
        material = fem.ElasticMaterial(self.modulus, self.poisson)
        if self.target == "rotation":
            z = fem.make_rotation_target(mesh, self.rotation_angle)
        else:
            base = fem.assemble(mesh, material)
            z = fem.make_deadload_target(base, self.deadload_magnitude)
            if self.deadload_noise > 0.0:
                if rng is None:
                    rng = np.random.default_rng(self.seed)
                amp = self.deadload_noise * np.abs(z).max()
                z = z + rng.uniform(-amp, amp, z.shape)
        return fem.assemble(mesh, material, z)


_FIELD_PARSERS = {
    "model": str,
    "penalty": str,
    "target": str,
    "output_dir": str,
    "phases": _parse_float_list,
    "omegas": _parse_float_list,
    "seed": int,
    "n_steps": int,
    "target_index": int,
    "nx": int,
    "ny": int,
    "max_newton": int,
    "krylov_max": int,
    "ls_max": int,
}
_KNOWN_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        parser = _FIELD_PARSERS.get(key, float)
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
    for required in ("model", "penalty", "alpha", "seed"):
        if required not in values:
            raise ConfigError(f"{source}: missing required key {required!r}")
    try:
        return ExperimentConfig(**values)
    except (ConfigError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read(), source=str(path))


def dump_config(cfg: ExperimentConfig):
    """Echo an effective configuration; re-parsing yields the same config."""
    lines = []
    for f in fields(cfg):
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            if not val:
                continue
            rendered = ", ".join(repr(float(v)) for v in val)
        elif isinstance(val, str):
            if not val:
                continue
            rendered = val
        elif isinstance(val, float):
            rendered = repr(val)
        else:
            rendered = str(val)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"
