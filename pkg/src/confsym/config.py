"""Run configuration: ``key = value`` sections with schema checking and line diagnostics."""
from __future__ import annotations

import ast
import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError

FORMAT_VERSION = "1.0"

DEFAULT_TOLERANCES = {
    "fiber": 1e-10,
    "wave": 1e-12,
    "quadrature": 1e-11,
    "fit": 0.1,
    "check": 1e-6,
    "conformal": 1e-12,
    "exactness": 1e-10,
    "pairing": 1e-6,
    "series": 1e-8,
}

SCHEMA = {
    "system": {"name": str, "variables": str, "forward": str, "inverse": str, "eta": float,
               "omega": str, "periodic": str},
    "params": None,  # free-form numeric parameters of the system builder
    "tolerances": {k: float for k in DEFAULT_TOLERANCES},
    "sampling": {"count": int, "seed": int},
    "output": {"dir": str, "format": str},
}

FORMATS = ("json", "csv", "both")


@dataclass
class RunConfig:
    system: str = "dsm"
    params: dict = field(default_factory=dict)
    custom: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    samples: int = 1000
    seed: int = 0
    out_dir: str | None = None
    fmt: str = "json"

    def validate(self) -> "RunConfig":
        for k, v in self.tolerances.items():
            if not v > 0:
                raise SchemaError(f"tolerance {k!r} must be positive, got {v}")
        if self.samples <= 0:
            raise SchemaError(f"sample count must be positive, got {self.samples}")
        if self.fmt not in FORMATS:
            raise SchemaError(f"format must be one of {', '.join(FORMATS)}, got {self.fmt!r}")
        return self

    def to_dict(self) -> dict:
        return {"system": self.system, "params": self.params, "tolerances": self.tolerances,
                "samples": self.samples, "seed": self.seed, "format": self.fmt}


def parse_value(text: str):
    """Literal number, tuple or string."""
    text = text.strip()
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    out, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            out[(section, None)] = no
        elif "=" in s and section is not None and not s.startswith(("#", ";")):
            out[(section, s.split("=", 1)[0].strip().lower())] = no
    return out


def _where(lines: dict, section: str, key: str | None = None) -> str:
    no = lines.get((section, key)) or lines.get((section, None))
    return f"line {no}" if no else "config"


def loads(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise SchemaError(f"{source}: {exc}") from exc
    lines = _line_index(text)
    cfg = RunConfig()
    for section in parser.sections():
        if section not in SCHEMA:
            raise SchemaError(f"{source}: {_where(lines, section)}: unknown section [{section}]")
        fields = SCHEMA[section]
        for key, raw in parser.items(section):
            loc = f"{source}: {_where(lines, section, key)}: [{section}] {key}"
            if fields is None:
                value = parse_value(raw)
                if isinstance(value, str):
                    raise SchemaError(f"{loc}: parameter values must be numeric or tuples, got {raw!r}")
                cfg.params[key] = value
                continue
            if key not in fields:
                raise SchemaError(f"{loc}: unknown field; expected one of {', '.join(sorted(fields))}")
            try:
                value = fields[key](raw.strip())
            except ValueError as exc:
                raise SchemaError(f"{loc}: expected {fields[key].__name__}, got {raw!r}") from exc
            if section == "system":
                if key == "name":
                    cfg.system = value
                else:
                    cfg.custom[key] = value
            elif section == "tolerances":
                if not value > 0:
                    raise SchemaError(f"{loc}: tolerance must be positive")
                cfg.tolerances[key] = value
            elif section == "sampling":
                if key == "count":
                    cfg.samples = value
                else:
                    cfg.seed = value
            elif section == "output":
                if key == "dir":
                    cfg.out_dir = value
                else:
                    cfg.fmt = value
    if cfg.custom and cfg.system != "custom":
        raise SchemaError(f"{source}: {_where(lines, 'system')}: expression fields need name = custom")
    return cfg.validate()


def load(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from exc
    return loads(text, str(p))


def build_system(cfg: RunConfig):
    """Registered system from the name and parameters, or a custom system from expressions."""
    from .dynamics import registry_get  # noqa: PLC0415
    from .errors import ArgumentError  # noqa: PLC0415
    from .systems import custom_system  # noqa: PLC0415

    if cfg.system == "custom":
        c = cfg.custom
        for key in ("variables", "forward"):
            if key not in c:
                raise SchemaError(f"custom system needs [system] {key}")
        variables = [v.strip() for v in c["variables"].split(",")]
        forward = [e.strip() for e in c["forward"].split(";")]
        inverse = [e.strip() for e in c["inverse"].split(";")] if "inverse" in c else None
        omega = []
        if "omega" in c:
            for item in c["omega"].split(";"):
                parts = item.split()
                if len(parts) != 3:
                    raise SchemaError(f"omega entries are 'i j coefficient', got {item!r}")
                omega.append((int(parts[0]), int(parts[1]), float(parts[2])))
        periodic = None
        if "periodic" in c:
            flags = {v.strip() for v in c["periodic"].split(",")}
            periodic = [v in flags for v in variables]
        try:
            return custom_system(variables, forward, inverse, cfg.params, c.get("eta", 1.0), omega, periodic)
        except ArgumentError as exc:
            raise SchemaError(str(exc)) from exc
    try:
        return registry_get(cfg.system, **cfg.params)
    except (TypeError, ArgumentError) as exc:
        raise SchemaError(f"bad parameters for system {cfg.system!r}: {exc}") from exc
