"""Run configuration read from INI files."""
from __future__ import annotations

import configparser
import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

from .grid import GridSpec, QuadratureSpec

SUITE_NAMES = ("clifford", "chi", "sigma-decay", "dirac-lemmas", "takai", "theta-j",
               "star-product", "crossed-g", "rg-index", "hp-dims")
GROUP_ORDERS = (1, 2, 3, 4, 6)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    grid_L: float = 8.0
    grid_h: float = 0.25
    takai_L: float = 4.0
    takai_h: float = 0.25
    takai_L2: float = 2.0
    takai_h2: float = 0.5
    quad: QuadratureSpec = QuadratureSpec()
    chi_sigma: float = 14.0
    suites: tuple = SUITE_NAMES
    groups: tuple = GROUP_ORDERS
    refine: int = 3
    n: int = 2
    tolerances: dict = field(default_factory=dict)
    source: str = ""

    def __post_init__(self):
        unknown = [s for s in self.suites if s not in SUITE_NAMES]
        if unknown:
            raise ConfigError(f"unknown suite(s): {', '.join(unknown)}")
        bad = [k for k in self.groups if k not in GROUP_ORDERS]
        if bad:
            raise ConfigError(f"unsupported group order(s): {bad}")
        for name, v in self.tolerances.items():
            if not v > 0:
                raise ConfigError(f"tolerance {name} must be positive")
        if self.refine < 2:
            raise ConfigError("refine needs at least two resolutions")
        if self.n not in (1, 2, 3):
            raise ConfigError("n must be 1, 2 or 3")
        if self.chi_sigma <= 0:
            raise ConfigError("chi sigma must be positive")
        try:
            GridSpec(2, self.grid_L, self.grid_h)
            GridSpec(1, self.takai_L, self.takai_h)
            GridSpec(2, self.takai_L2, self.takai_h2)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def tol(self, name: str) -> float:
        return self.tolerances[name]

    @property
    def grid(self) -> GridSpec:
        return GridSpec(2, self.grid_L, self.grid_h)

    def canonical(self) -> str:
        """Stable text form of the effective settings, used for the report hash."""
        d = asdict(self)
        d.pop("source")
        return json.dumps(d, sort_keys=True, default=list)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def default_text() -> str:
    return resources.files("ncthom").joinpath("default.ini").read_text()


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def parse_config(text: str) -> RunConfig:
    """Read a config; keys missing from ``text`` fall back to the packaged defaults."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(default_text())
        cp.read_string(text)
        suites = [s.strip() for s in cp["run"]["suites"].split(",") if s.strip()]
        if suites == ["all"]:
            suites = list(SUITE_NAMES)
        quad = QuadratureSpec(_floats(cp["quad"]["epsilon_sequence"]),
                              cp["quad"].getint("richardson_order"), cp["quad"].getint("nodes"))
        return RunConfig(
            grid_L=cp["grid"].getfloat("L"), grid_h=cp["grid"].getfloat("h"),
            takai_L=cp["takai"].getfloat("L"), takai_h=cp["takai"].getfloat("h"),
            takai_L2=cp["takai"].getfloat("L2"), takai_h2=cp["takai"].getfloat("h2"),
            quad=quad,
            chi_sigma=cp["chi"].getfloat("sigma"),
            suites=tuple(suites),
            groups=tuple(int(k) for k in _floats(cp["run"]["groups"])),
            refine=cp["run"].getint("refine"),
            n=cp["run"].getint("n"),
            tolerances={k: float(v) for k, v in cp["tolerances"].items()},
            source=text,
        )
    except ConfigError:
        raise
    except (configparser.Error, KeyError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def load_config(path=None) -> RunConfig:
    if path is None:
        return parse_config("")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
