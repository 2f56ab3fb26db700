"""Run configurations: named figure presets plus key=value overrides."""

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import biharmonic as bih
from .errors import DomainError
from .gradientflow import gf_evolve
from .linalg import cell_centers
from .mapped import mapped_evolve
from .presets import resolve_ic
from .regularized import RegParams, reg_evolve

PROBLEMS = ("od1d", "od2d", "bih1d")
METHODS = ("gradient", "mapped", "regularized")
BIH_ICS = {"ramp": bih.ramp_ic, "scaled": bih.scaled_steady_ic}


@dataclass(frozen=True)
class Config:
    problem: str = "od1d"
    method: str = "gradient"
    n: int = 128
    k: float = 1e-3
    t_end: float = 0.2
    ic: str = "quadratic"
    c: float = 1e4
    length: float = 1.0
    output_dir: str = "runs"
    dumps: int = 10

    def validate(self):
        if self.problem not in PROBLEMS:
            raise DomainError(f"problem must be one of {PROBLEMS}")
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}")
        if self.method == "mapped" and self.problem != "od1d":
            raise DomainError("method=mapped is only available for problem=od1d")
        if self.problem == "bih1d" and self.method != "gradient":
            raise DomainError("problem=bih1d supports method=gradient only")
        if self.n < 3 or self.k <= 0 or self.t_end < 0 or self.length <= 0 or self.c <= 0:
            raise DomainError("need n >= 3 and positive k, length, c; t_end >= 0")
        if self.dumps < 1:
            raise DomainError("dumps must be at least 1")
        if self.problem == "bih1d":
            if self.ic not in BIH_ICS:
                raise DomainError(f"bih1d ic must be one of {sorted(BIH_ICS)}")
        else:
            resolve_ic(self.ic, 2 if self.problem == "od2d" else 1)
        return self

    @property
    def h(self):
        return self.length / self.n

    def as_dict(self):
        return asdict(self)


SCENARIOS = {
    "fig1-left": Config("od1d", "gradient", 128, 1e-3, 0.2, "quadratic", length=1.0),
    "fig1-right": Config("od1d", "gradient", 192, 1e-3, 0.3, "nonmonotone", length=1.5),
    "fig2": Config("od1d", "gradient", 384, 1e-4, 0.04, "twobump", length=1.5),
    "fig3": Config("od2d", "gradient", 64, 1e-4, 0.02, "twoarcs", length=1.0),
    "fig6": Config("bih1d", "gradient", 192, 0.05, 20.0, "ramp", length=3.0),
}

_FIELD_TYPES = {f.name: f.type for f in fields(Config)}


def coerce(key, value):
    """Convert a textual override to the field's type."""
    if key not in _FIELD_TYPES:
        raise DomainError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    try:
        if kind in (int, "int"):
            return int(value)
        if kind in (float, "float"):
            return float(value)
    except ValueError:
        raise DomainError(f"bad value for {key}: {value!r}") from None
    return str(value)


def parse_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = coerce(key, value)
    return out


def build_config(preset=None, overrides=None):
    base = Config()
    if preset is not None:
        if preset not in SCENARIOS:
            raise DomainError(f"unknown preset {preset!r}; choose from {sorted(SCENARIOS)}")
        base = SCENARIOS[preset]
    return replace(base, **(overrides or {})).validate()


@dataclass
class RunResult:
    config: Config
    grid: tuple              # coordinate arrays for the fixed grid, or () for mapped
    trajectory: object = None
    track: object = None
    mapped_snapshots: list = None


def run(cfg):
    """Execute one configuration and return its raw results."""
    cfg.validate()
    if cfg.problem == "bih1d":
        p = bih.BihProblem(cfg.n, cfg.k, L=cfg.length)
        tr = bih.bih_evolve(BIH_ICS[cfg.ic](p.x), p, cfg.t_end)
        return RunResult(cfg, (p.x,), trajectory=tr)
    dim = 2 if cfg.problem == "od2d" else 1
    ic = resolve_ic(cfg.ic, dim)
    x = cell_centers(cfg.n, cfg.length)
    if cfg.method == "mapped":
        track, snaps = mapped_evolve(ic, cfg.n, cfg.k, cfg.t_end)
        return RunResult(cfg, (), track=track, mapped_snapshots=snaps)
    if dim == 2:
        X, Y = np.meshgrid(x, x, indexing="ij")
        u0, grid = ic(X, Y), (x, x)
    else:
        u0, grid = ic(x), (x,)
    if cfg.method == "regularized":
        tr = reg_evolve(u0, RegParams(cfg.c, cfg.k, cfg.h), cfg.t_end)
    else:
        tr = gf_evolve(u0, cfg.k, cfg.t_end, cfg.h)
    return RunResult(cfg, grid, trajectory=tr)
