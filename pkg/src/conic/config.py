"""Line-based job configuration: ``section.key = value`` with ``#`` comments.

The format is deliberately flat so that parsing is dependency-free and
serialization is bit-exact: ``parse(serialize(cfg))`` recovers ``cfg`` and
serialization echoes every field, defaults included.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .catalog import CATALOG_NAMES
from .errors import ConfigError

COMMANDS = ("curvature", "check", "barriers", "solve", "yamabe", "examples")


@dataclass(frozen=True)
class JobConfig:
    command: str = ""
    example: str = ""
    m: int = 2
    x_max: float = 1.0
    k: float = 2.0
    link_curvature: float | None = None
    link_kind: str = "constant"
    link_bump: float = 0.0
    n: int = 256
    gamma: float = 2.0
    n_theta: int = 0
    residual_tol: float = 1e-8
    step_tol: float = 1e-10
    max_iterations: int = 500
    ladder_rate: float = 0.5
    output_dir: str = ""

    def validate(self, line_of: dict[str, int] | None = None):
        line_of = line_of or {}

        def fail(key: str, message: str):
            raise ConfigError(message, line_of.get(key))

        if self.command and self.command not in COMMANDS:
            fail("command", f"unknown command {self.command!r}; "
                            f"choices: {', '.join(COMMANDS)}")
        if self.example and self.example not in CATALOG_NAMES:
            fail("metric.example", f"unknown metric example {self.example!r}; "
                                   f"choices: {', '.join(CATALOG_NAMES)}")
        if self.m < 2:
            fail("metric.m", f"metric.m must be >= 2 (got {self.m}); "
                             "the link of a conic metric is at least a surface")
        if self.x_max <= 0:
            fail("metric.x_max", "metric.x_max must be positive")
        if self.k <= 0:
            fail("metric.k", "metric.k must be positive")
        if self.link_kind not in ("constant", "axisymmetric"):
            fail("metric.link", "metric.link must be 'constant' or 'axisymmetric'")
        if self.n < 64:
            fail("grid.n", f"grid.n must be >= 64 (got {self.n})")
        if self.gamma < 1.0:
            fail("grid.gamma", "grid.gamma must be >= 1")
        if self.n_theta < 0:
            fail("grid.n_theta", "grid.n_theta must be >= 0")
        if not 0.0 < self.ladder_rate < 1.0:
            fail("solver.ladder_rate", "solver.ladder_rate must lie in (0, 1)")
        if self.max_iterations < 1:
            fail("solver.max_iterations", "solver.max_iterations must be >= 1")
        if self.residual_tol <= 0 or self.step_tol <= 0:
            fail("solver.residual_tol", "solver tolerances must be positive")


def _parse_optional_float(text: str) -> float | None:
    if text == "auto":
        return None
    return float(text)


def _format_optional_float(value: float | None) -> str:
    return "auto" if value is None else repr(value)


# key -> (attribute, parser, formatter)
_KEYS: dict[str, tuple[str, object, object]] = {
    "command": ("command", str, str),
    "metric.example": ("example", str, str),
    "metric.m": ("m", int, str),
    "metric.x_max": ("x_max", float, repr),
    "metric.k": ("k", float, repr),
    "metric.link_curvature": ("link_curvature", _parse_optional_float,
                              _format_optional_float),
    "metric.link": ("link_kind", str, str),
    "metric.link_bump": ("link_bump", float, repr),
    "grid.n": ("n", int, str),
    "grid.gamma": ("gamma", float, repr),
    "grid.n_theta": ("n_theta", int, str),
    "solver.residual_tol": ("residual_tol", float, repr),
    "solver.step_tol": ("step_tol", float, repr),
    "solver.max_iterations": ("max_iterations", int, str),
    "solver.ladder_rate": ("ladder_rate", float, repr),
    "output.dir": ("output_dir", str, str),
}


def parse_config(text: str) -> JobConfig:
    """Parse and validate; unknown keys and type mismatches carry line numbers."""
    values: dict[str, object] = {}
    line_of: dict[str, int] = {}
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        seen.add(key)
        attr, parser, _ = _KEYS[key]
        try:
            values[attr] = parser(value)
        except (TypeError, ValueError):
            raise ConfigError(
                f"bad value {value!r} for {key} "
                f"(expected {getattr(parser, '__name__', 'value')})", lineno) from None
        line_of[key] = lineno
    cfg = JobConfig(**values)
    cfg.validate(line_of)
    return cfg


def serialize_config(cfg: JobConfig) -> str:
    """Canonical text with every field echoed, defaults included."""
    lines = []
    for key, (attr, _, formatter) in _KEYS.items():
        lines.append(f"{key} = {formatter(getattr(cfg, attr))}")
    return "\n".join(lines) + "\n"
