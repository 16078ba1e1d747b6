"""
Run configuration for the command-line front end.

Configs are TOML files. Unknown keys anywhere are rejected. Layout and
defaults::

    domain = "cube"          # or "ball"; required by every mesh-based command
    level = 4                # voxels per axis (cube) or refinement level (ball)
    out = "out"              # output directory; --out overrides
    bound = 0.1              # conductivity bound C, gamma in [C, 1/C]

    [w]                      # default: kind = "coordinate", axis = 3
    kind = "coordinate"      # coordinate | dist_to_point | dist_to_axis | nodal
    axis = 3                 # coordinate: 1, 2 or 3
    offset = 0.0             # coordinate
    point = [0.0, 0.0, -2.0] # dist_to_point, dist_to_axis
    direction = [0.0, 1.0, 0.0]  # dist_to_axis
    path = "w.npy"           # nodal

    [gamma]                  # default: kind = "constant", value = 1.0
    kind = "constant"        # constant | inclusion | grad_norm
    value = 1.0
    center = [0.5, 0.5, 0.5] # inclusion
    radius = 0.25
    inside = 2.0
    outside = 1.0
    power = 1                # grad_norm: 1 or 2

    [solver]                 # SolverConfig fields
    mode = "unitary"         # unitary | weighted_w2 | gamma | gamma_absw
    tol = 1e-10
    vector_tol = 1e-8
    maxit = 500
    cg_tol = 1e-12
    cg_maxit = 0             # 0 means 10 x number of unknowns
    seed = 42                # --seed overrides
    noise = 1e-3

    [solve]
    v0 = "default"           # default | w | x1 | x2 | x3 | path to a field file

    [verify]
    u = "u.npy"              # required
    v = "v.npy"              # required
    w = ""                   # optional field file; the [w] spec otherwise

    [dtn]
    gammas = [{kind = "constant", value = 1.0, label = "one"}]
    ws = [{kind = "coordinate", axis = 3, label = "x3"}]

    [convergence]
    case = "quadratic"       # quadratic | affine | unitarity
    levels = [8, 16, 32]
    reference = "exact"      # quadratic only: exact | interpolated

    [check_cr]
    matrix = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    alpha = [0.5, 0.5, 0.0]

Relative paths inside a config resolve against the config file's directory.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConjPairError
from .fields import (
    DEFAULT_BOUND,
    ConstantGamma,
    Coordinate,
    DistToAxis,
    DistToPoint,
    GradNormGamma,
    InclusionGamma,
)
from .solver import SolverConfig

U64_MAX = 2**64 - 1


class ConfigError(ConjPairError, ValueError):
    """Malformed, incomplete or unknown configuration."""


_TOP = {"domain", "level", "out", "bound", "w", "gamma", "solver", "solve", "verify", "dtn", "convergence", "check_cr"}
_W_KEYS = {
    "coordinate": {"axis", "offset"},
    "dist_to_point": {"point"},
    "dist_to_axis": {"point", "direction"},
    "nodal": {"path"},
}
_GAMMA_KEYS = {
    "constant": {"value"},
    "inclusion": {"center", "radius", "inside", "outside"},
    "grad_norm": {"power"},
}
_SOLVER_KEYS = {"mode", "tol", "vector_tol", "maxit", "cg_tol", "cg_maxit", "seed", "noise"}
_SECTION_KEYS = {
    "solve": {"v0"},
    "verify": {"u", "v", "w"},
    "dtn": {"gammas", "ws"},
    "convergence": {"case", "levels", "reference"},
    "check_cr": {"matrix", "alpha"},
}


def _reject_unknown(where: str, got, allowed) -> None:
    extra = sorted(set(got) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _table(raw, key) -> dict:
    val = raw.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"[{key}] must be a table")
    return val


@dataclass
class RunConfig:
    domain: str | None = None
    level: int = 4
    out: Path = Path("out")
    bound: float = DEFAULT_BOUND
    w: object = field(default_factory=Coordinate)
    gamma: object = field(default_factory=ConstantGamma)
    solver: SolverConfig = field(default_factory=SolverConfig)
    solve: dict = field(default_factory=lambda: {"v0": "default"})
    verify: dict = field(default_factory=dict)
    dtn_gammas: list = field(default_factory=list)  # (label, spec)
    dtn_ws: list = field(default_factory=list)  # (label, spec)
    convergence: dict = field(default_factory=lambda: {"case": "quadratic", "levels": [8, 16, 32], "reference": "exact"})
    check_cr: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def require_domain(self) -> str:
        if self.domain is None:
            raise ConfigError("config is missing the required key 'domain'")
        return self.domain

    def resolve(self, path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def parse_w(tbl: dict, where: str = "[w]"):
    tbl = dict(tbl)
    kind = tbl.pop("kind", "coordinate")
    if kind not in _W_KEYS:
        raise ConfigError(f"{where}: unknown kind {kind!r}; expected one of {sorted(_W_KEYS)}")
    _reject_unknown(where, tbl, _W_KEYS[kind])
    try:
        if kind == "coordinate":
            return Coordinate(axis=int(tbl.get("axis", 3)), offset=float(tbl.get("offset", 0.0)))
        if kind == "dist_to_point":
            return DistToPoint(point=_vec3(tbl.get("point", (0.0, 0.0, -2.0)), where))
        if kind == "dist_to_axis":
            return DistToAxis(
                point=_vec3(tbl.get("point", (0.0, 0.0, -2.0)), where),
                direction=_vec3(tbl.get("direction", (0.0, 1.0, 0.0)), where),
            )
        if "path" not in tbl:
            raise ConfigError(f"{where}: kind 'nodal' needs 'path'")
        return ("nodal", tbl["path"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc


def parse_gamma(tbl: dict, where: str = "[gamma]"):
    tbl = dict(tbl)
    kind = tbl.pop("kind", "constant")
    if kind not in _GAMMA_KEYS:
        raise ConfigError(f"{where}: unknown kind {kind!r}; expected one of {sorted(_GAMMA_KEYS)}")
    _reject_unknown(where, tbl, _GAMMA_KEYS[kind])
    try:
        if kind == "constant":
            return ConstantGamma(float(tbl.get("value", 1.0)))
        if kind == "inclusion":
            return InclusionGamma(
                center=_vec3(tbl.get("center", (0.5, 0.5, 0.5)), where),
                radius=float(tbl.get("radius", 0.25)),
                inside=float(tbl.get("inside", 2.0)),
                outside=float(tbl.get("outside", 1.0)),
            )
        return GradNormGamma(int(tbl.get("power", 1)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _vec3(x, where):
    try:
        vals = tuple(float(c) for c in x)
    except TypeError as exc:
        raise ConfigError(f"{where}: expected a list of 3 numbers, got {x!r}") from exc
    if len(vals) != 3:
        raise ConfigError(f"{where}: expected a list of 3 numbers, got {x!r}")
    return vals


def parse_solver(tbl: dict) -> SolverConfig:
    _reject_unknown("[solver]", tbl, _SOLVER_KEYS)
    kw = dict(tbl)
    if kw.get("cg_maxit", None) == 0:
        kw["cg_maxit"] = None
    if "seed" in kw:
        kw["seed"] = check_seed(kw["seed"])
    try:
        return SolverConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[solver]: {exc}") from exc


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= U64_MAX:
        raise ConfigError(f"seed must be an integer in [0, 2^64 - 1], got {seed!r}")
    return seed


def _labelled(items, parser, key):
    if not isinstance(items, list) or not items:
        raise ConfigError(f"[dtn] {key} must be a non-empty list of tables")
    out = []
    for k, item in enumerate(items):
        if not isinstance(item, dict):
            raise ConfigError(f"[dtn] {key}[{k}] must be a table")
        item = dict(item)
        label = str(item.pop("label", f"{key[:-1]}{k}"))
        out.append((label, parser(item, f"[dtn] {key}[{k}]")))
    return out


def parse_config(raw: dict, base_dir=".") -> RunConfig:
    """Validate a decoded TOML document into a :class:`RunConfig`."""
    _reject_unknown("top level", raw, _TOP)
    cfg = RunConfig(base_dir=Path(base_dir))
    if "domain" in raw:
        if raw["domain"] not in ("cube", "ball"):
            raise ConfigError(f"domain must be 'cube' or 'ball', got {raw['domain']!r}")
        cfg.domain = raw["domain"]
    if "level" in raw:
        cfg.level = _level(raw["level"])
    if "out" in raw:
        cfg.out = cfg.resolve(str(raw["out"]))
    if "bound" in raw:
        cfg.bound = float(raw["bound"])
        if not 0.0 < cfg.bound <= 1.0:
            raise ConfigError(f"bound must lie in (0, 1], got {cfg.bound}")
    if "w" in raw:
        cfg.w = parse_w(_table(raw, "w"))
    if "gamma" in raw:
        cfg.gamma = parse_gamma(_table(raw, "gamma"))
    cfg.solver = parse_solver(_table(raw, "solver"))
    for key, allowed in _SECTION_KEYS.items():
        _reject_unknown(f"[{key}]", _table(raw, key), allowed)
    cfg.solve.update(_table(raw, "solve"))
    cfg.verify = dict(_table(raw, "verify"))
    dtn = _table(raw, "dtn")
    if dtn:
        cfg.dtn_gammas = _labelled(dtn.get("gammas", [{"kind": "constant"}]), parse_gamma, "gammas")
        cfg.dtn_ws = _labelled(dtn.get("ws", [{"kind": "coordinate"}]), parse_w, "ws")
    conv = _table(raw, "convergence")
    cfg.convergence.update(conv)
    cfg.check_cr = dict(_table(raw, "check_cr"))
    return cfg


def _level(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < 1:
        raise ConfigError(f"level must be an integer >= 1, got {x!r}")
    return x


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, base_dir=path.parent)
