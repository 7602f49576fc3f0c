"""Scenario config files.

Flat UTF-8 text with ``[section]`` headers, ``key = value`` lines and ``#``
comments. Sections map onto the parameter dataclasses:

``[scenario]``  :class:`~quadimpact.engine.ScenarioConfig` scalars
``[rigid]``     :class:`~quadimpact.vehicle.RigidParams`
``[compliant]`` :class:`~quadimpact.vehicle.CompliantParams`
``[wall]``      :class:`~quadimpact.contact.ContactParams`
``[gains]``     :class:`~quadimpact.control.ControllerGains`
``[recovery]``  :class:`~quadimpact.control.RecoveryParams`

Keys are the dataclass field names. Vector values are comma separated.
Two keys are conveniences: ``pitch_deg`` in ``[scenario]`` sets the pitch in
degrees, and ``inertia_total`` in ``[compliant]`` back-solves the body-only
inertia from the airframe's total inertia.
"""

import configparser
import dataclasses

import numpy as np

from .contact import ContactParams
from .control import ControllerGains, RecoveryParams
from .engine import ScenarioConfig
from .errors import ConfigError
from .vehicle import CompliantParams, RigidParams

SECTIONS = {
    "rigid": RigidParams,
    "compliant": CompliantParams,
    "wall": ContactParams,
    "gains": ControllerGains,
    "recovery": RecoveryParams,
}

_SCENARIO_SKIP = {"rigid", "compliant", "wall", "gains", "recovery", "initial"}


def _line_of(text, section, key):
    """1-based line of ``key`` inside ``[section]``, or 0 if not found."""
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
        elif current == section and "=" in line:
            if line.split("=", 1)[0].strip() == key:
                return n
    return 0


def _parse_bool(s):
    v = s.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_vector(s):
    return tuple(float(x) for x in s.split(","))


def _convert(default, raw):
    """Convert ``raw`` to the type of the field default."""
    if isinstance(default, bool):
        return _parse_bool(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, str):
        return raw.strip()
    if isinstance(default, tuple) or default is None:
        return _parse_vector(raw)
    raise ValueError(f"unsupported field type {type(default).__name__}")


def _field_defaults(cls):
    out = {}
    for f in dataclasses.fields(cls):
        if f.default is not dataclasses.MISSING:
            out[f.name] = f.default
        elif f.default_factory is not dataclasses.MISSING:
            out[f.name] = f.default_factory()
        else:
            out[f.name] = None
    return out


def loads(text, source="<string>"):
    """Parse config text into a :class:`ScenarioConfig`.

    Raises
    ------
    ConfigError
        On syntax errors, unknown sections or keys, bad values or invalid
        parameter combinations. Messages carry ``source:line``.
    """
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",), empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: key outside any [section]") from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate section [{exc.section}]") from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate key {exc.option!r}") from exc
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno}: cannot parse {line.strip()!r}") from exc

    def fail(section, key, msg):
        n = _line_of(text, section, key)
        where = f"{source}:{n}" if n else source
        raise ConfigError(f"{where}: [{section}] {key}: {msg}")

    parts = {}
    scenario = {}
    for section in cp.sections():
        if section == "scenario":
            defaults = {k: v for k, v in _field_defaults(ScenarioConfig).items()
                        if k not in _SCENARIO_SKIP}
            target = scenario
        elif section in SECTIONS:
            defaults = _field_defaults(SECTIONS[section])
            target = parts.setdefault(section, {})
        else:
            n = next((i for i, ln in enumerate(text.splitlines(), 1)
                      if ln.strip().lower() == f"[{section}]"), 0)
            raise ConfigError(f"{source}:{n}: unknown section [{section}]")
        for key, raw in cp.items(section):
            try:
                if section == "scenario" and key == "pitch_deg":
                    target["pitch"] = float(np.radians(float(raw)))
                elif section == "compliant" and key == "inertia_total":
                    target["_inertia_total"] = _parse_vector(raw)
                elif key in defaults:
                    target[key] = _convert(defaults[key], raw)
                else:
                    fail(section, key, "unknown key")
            except ValueError as exc:
                fail(section, key, str(exc))

    built = {}
    for section, kw in parts.items():
        try:
            if section == "compliant" and "_inertia_total" in kw:
                total = kw.pop("_inertia_total")
                built[section] = CompliantParams.from_total_inertia(total=total, **kw)
            else:
                built[section] = SECTIONS[section](**kw)
        except ValueError as exc:
            raise ConfigError(f"{source}: [{section}] {exc}") from exc
    if "thrusts" in scenario and len(scenario["thrusts"]) != 4:
        fail("scenario", "thrusts", "needs four values")
    try:
        return ScenarioConfig(**scenario, **built)
    except ConfigError as exc:
        raise ConfigError(f"{source}: [scenario] {exc}") from exc


def load(path):
    """Read a config file; see :func:`loads`.

    Raises
    ------
    ConfigError
        If the file is missing or invalid.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return loads(text, source=str(path))


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps(cfg):
    """Config text that :func:`loads` maps back to ``cfg``.

    ``initial`` states are not representable and are omitted.
    """
    lines = ["[scenario]"]
    for name in _field_defaults(ScenarioConfig):
        if name in _SCENARIO_SKIP:
            continue
        v = getattr(cfg, name)
        if v is None:
            continue
        lines.append(f"{name} = {_format_value(v)}")
    for section in SECTIONS:
        obj = getattr(cfg, section)
        lines.append("")
        lines.append(f"[{section}]")
        for f in dataclasses.fields(obj):
            lines.append(f"{f.name} = {_format_value(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"
