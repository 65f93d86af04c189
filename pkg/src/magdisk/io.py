"""Scenario files (TOML) and report emission in csv, json and table formats.

Scenario file layout::

    [disk]
    r0 = 1.0

    [field]
    kind = "constant"          # constant | polynomial | tabulated | power_law_boundary
    B0 = 5.0

    [potential]
    kind = "zero"              # zero | constant | polynomial | tabulated

    [params]
    epsilon = 0.5

    [numerics]                 # optional
    N = 1000

``r0``, the field kind and ``epsilon`` have no defaults. Unknown keys,
duplicate keys and type mismatches are errors reported with line numbers.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import re
from pathlib import Path

import tomli

from .model import (
    ConstantField,
    ConstantPotential,
    Disk,
    Numerics,
    PolynomialField,
    PolynomialPotential,
    PowerLawBoundaryField,
    Scenario,
    ScenarioError,
    SpectralParams,
    TabulatedField,
    TabulatedPotential,
    ZeroPotential,
    scenario_errors,
)

SECTIONS = ("disk", "field", "potential", "params", "numerics")
REQUIRED_SECTIONS = ("disk", "field", "potential", "params")

FIELD_KEYS = {
    "constant": ("B0",),
    "polynomial": ("coefficients",),
    "tabulated": ("grid", "values"),
    "power_law_boundary": ("K", "c", "beta"),
}
POTENTIAL_KEYS = {
    "zero": (),
    "constant": ("V0",),
    "polynomial": ("coefficients",),
    "tabulated": ("grid", "values"),
}
PARAM_KEYS = {
    "epsilon": "real",
    "alpha": "real",
    "sigma": "real",
    "lambda_shift": "real",
    "L_const_half": "real",
    "L_const": "real",
    "remark3_mode": "bool",
}
NUMERIC_KEYS = {
    "N": "int",
    "abs_tol": "real",
    "r_inf_factor": "real",
    "oracle_2d": "bool",
    "oracle_2d_grid": "int",
}
LIST_KEYS = {"coefficients", "grid", "values"}

CSV_COLUMNS = ("scenario_hash", "inequality", "sigma", "alpha", "epsilon", "Lambda",
               "lhs", "rhs", "ratio", "verdict", "tol")
SPECTRUM_COLUMNS = ("scenario_hash", "index", "m", "k", "eigenvalue", "error_estimate")

# which key a hypothesis message is attributed to
_HYPOTHESIS_KEYS = (
    ("epsilon", ("params", "epsilon")),
    ("alpha", ("params", "alpha")),
    ("sigma", ("params", "sigma")),
    ("lambda_shift", ("params", "lambda_shift")),
    ("L constants", ("params", "L_const")),
    ("growing-field", ("field", "K")),
    ("power-law field requires c", ("field", "c")),
    ("beta", ("field", "beta")),
    ("field", ("field", "kind")),
    ("potential", ("potential", "kind")),
    ("radius", ("disk", "r0")),
    ("grid size", ("numerics", "N")),
    ("abs_tol", ("numerics", "abs_tol")),
    ("r_inf_factor", ("numerics", "r_inf_factor")),
    ("oracle_2d_grid", ("numerics", "oracle_2d_grid")),
)


class ScenarioFileError(ValueError):
    """Problems found while reading a scenario file; ``errors`` holds one located message each."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class EmitError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parsing

_HEADER = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\-]+)\s*\]\s*(#.*)?$")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-]+|\"[^\"]*\")\s*=")


def _scan_locations(text: str):
    """Line numbers of section headers and keys, plus duplicate-key findings."""
    sections: dict[str, int] = {}
    keys: dict[tuple, tuple[int, int]] = {}
    duplicates = []
    current = ""
    depth = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if depth == 0:
            hm = _HEADER.match(line)
            if hm:
                current = hm.group(1)
                if current in sections:
                    duplicates.append(f"line {lineno}: duplicate section [{current}] (first defined on line {sections[current]})")
                else:
                    sections[current] = lineno
                continue
            km = _KEY.match(line)
            if km:
                key = km.group(1).strip('"')
                col = line.index(km.group(1)) + 1
                if (current, key) in keys:
                    first = keys[(current, key)][0]
                    duplicates.append(
                        f"line {lineno}, column {col}: duplicate key '{key}' in [{current}] "
                        f"(first defined on line {first})"
                    )
                else:
                    keys[(current, key)] = (lineno, col)
        stripped = re.sub(r'"[^"]*"', "", line.split("#", 1)[0])
        depth += stripped.count("[") - stripped.count("]")
        depth = max(depth, 0)
    return sections, keys, duplicates


class _Reader:
    def __init__(self, data, sections, keys, source):
        self.data = data
        self.sections = sections
        self.keys = keys
        self.source = source
        self.errors: list[str] = []

    def where(self, section, key=None) -> str:
        if key is not None and (section, key) in self.keys:
            line, col = self.keys[(section, key)]
            return f"{self.source}:{line}:{col}"
        if section in self.sections:
            return f"{self.source}:{self.sections[section]}"
        return self.source

    def error(self, section, key, message):
        self.errors.append(f"{self.where(section, key)}: {message}")

    def check_keys(self, section, allowed):
        for key in self.data.get(section, {}):
            if key not in allowed:
                self.error(section, key, f"unknown key '{key}' in [{section}] (allowed: {', '.join(sorted(allowed)) or 'none'})")

    def get(self, section, key, kind, required=False, default=None):
        table = self.data.get(section, {})
        if key not in table:
            if required:
                self.error(section, None, f"missing required key '{key}' in [{section}]")
            return default
        value = table[key]
        if kind == "real":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.error(section, key, f"'{key}' must be a number, got {type(value).__name__}")
                return default
            return float(value)
        if kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                self.error(section, key, f"'{key}' must be an integer, got {type(value).__name__}")
                return default
            return value
        if kind == "bool":
            if not isinstance(value, bool):
                self.error(section, key, f"'{key}' must be true or false, got {type(value).__name__}")
                return default
            return value
        if kind == "str":
            if not isinstance(value, str):
                self.error(section, key, f"'{key}' must be a string, got {type(value).__name__}")
                return default
            return value
        if kind == "list":
            if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
            ):
                self.error(section, key, f"'{key}' must be an array of numbers")
                return default
            return tuple(float(v) for v in value)
        raise AssertionError(kind)


def _profile(reader: _Reader, section: str, table: dict, r0):
    kind = reader.get(section, "kind", "str", required=True)
    if kind is None:
        return None
    if kind not in table:
        reader.error(section, "kind", f"unknown {section} kind '{kind}' (expected one of {', '.join(table)})")
        return None
    reader.check_keys(section, {"kind", *table[kind]})
    vals = {k: reader.get(section, k, "list" if k in LIST_KEYS else "real", required=True) for k in table[kind]}
    if any(v is None for v in vals.values()):
        return None
    if section == "field":
        if kind == "constant":
            return ConstantField(vals["B0"])
        if kind == "polynomial":
            return PolynomialField(vals["coefficients"])
        if kind == "tabulated":
            return TabulatedField(vals["grid"], vals["values"])
        if r0 is None:
            return None
        return PowerLawBoundaryField(vals["K"], vals["c"], vals["beta"], r0)
    if kind == "zero":
        return ZeroPotential()
    if kind == "constant":
        return ConstantPotential(vals["V0"])
    if kind == "polynomial":
        return PolynomialPotential(vals["coefficients"])
    return TabulatedPotential(vals["grid"], vals["values"])


def _locate_hypothesis(reader: _Reader, message: str) -> str:
    for needle, (section, key) in _HYPOTHESIS_KEYS:
        if needle in message:
            return reader.where(section, key)
    return reader.source


def parse_scenario_text(text: str, source: str = "<string>") -> Scenario:
    """Parse and validate scenario text; raise ScenarioFileError listing every problem."""
    sections, keys, duplicates = _scan_locations(text)
    if duplicates:
        raise ScenarioFileError([f"{source}: {d}" for d in duplicates])
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioFileError([f"{source}: {exc}"]) from exc

    reader = _Reader(data, sections, keys, source)
    for name, value in data.items():
        if name not in SECTIONS:
            reader.errors.append(f"{reader.where(name)}: unknown section [{name}]")
        elif not isinstance(value, dict):
            reader.error(name, None, f"'{name}' must be a section")
    for name in REQUIRED_SECTIONS:
        if name not in data:
            reader.errors.append(f"{source}: missing section [{name}]")
    if reader.errors:
        raise ScenarioFileError(reader.errors)

    reader.check_keys("disk", {"r0"})
    r0 = reader.get("disk", "r0", "real", required=True)
    fld = _profile(reader, "field", FIELD_KEYS, r0)
    pot = _profile(reader, "potential", POTENTIAL_KEYS, r0)

    reader.check_keys("params", set(PARAM_KEYS))
    eps = reader.get("params", "epsilon", "real", required=True)
    defaults = SpectralParams(0.5)
    params_kw = {
        k: reader.get("params", k, kind, default=getattr(defaults, k))
        for k, kind in PARAM_KEYS.items() if k != "epsilon"
    }
    reader.check_keys("numerics", set(NUMERIC_KEYS))
    ndef = Numerics()
    numerics_kw = {k: reader.get("numerics", k, kind, default=getattr(ndef, k)) for k, kind in NUMERIC_KEYS.items()}
    if reader.errors or fld is None or pot is None or r0 is None or eps is None:
        raise ScenarioFileError(reader.errors or [f"{source}: incomplete scenario"])

    scenario = Scenario(Disk(r0), fld, pot, SpectralParams(eps, **params_kw), Numerics(**numerics_kw))
    problems = scenario_errors(scenario)
    if problems:
        raise ScenarioFileError([f"{_locate_hypothesis(reader, p)}: {p}" for p in problems])
    return scenario


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioFileError([f"{path}: cannot read scenario file ({exc.strerror})"]) from exc
    return parse_scenario_text(text, str(path))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf") if not math.isnan(v) else "nan"
    return str(v)


def scenario_to_toml(scenario: Scenario) -> str:
    """Scenario file text that parses back to an equal scenario."""
    d = scenario.to_dict()
    d["field"] = {k: v for k, v in d["field"].items() if k != "r0"}
    lines = []
    for name in SECTIONS:
        lines.append(f"[{name}]")
        for key, value in d[name].items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# emission


def _g17(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return "%.17g" % float(x)


def _g6(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return "%.6g" % float(x)


def bound_rows(records) -> list[dict]:
    rows = []
    for rec in records:
        p = rec.scenario["params"]
        for b in rec.bounds:
            rows.append({
                "scenario_hash": rec.scenario_hash,
                "inequality": b["inequality"],
                "sigma": b["sigma"],
                "alpha": p["alpha"],
                "epsilon": p["epsilon"],
                "Lambda": b["Lambda"],
                "lhs": b["lhs"],
                "rhs": b["rhs"],
                "ratio": b["ratio"],
                "verdict": b["verdict"],
                "tol": b["tolerance"],
            })
    return rows


def spectrum_rows(records) -> list[dict]:
    rows = []
    for rec in records:
        if not rec.spectrum:
            continue
        for i, e in enumerate(rec.spectrum["entries"]):
            rows.append({"scenario_hash": rec.scenario_hash, "index": i, "m": e["m"], "k": e["k"],
                         "eigenvalue": e["eigenvalue"], "error_estimate": e["error_estimate"]})
    return rows


def render(records, fmt: str = "csv", what: str = "bounds", include_metadata: bool = True) -> str:
    """Render records as text. ``what`` selects bound reports or spectrum entries for csv/table."""
    records = list(records)
    if not records:
        raise EmitError("no records to emit")
    if fmt == "json":
        payload = [r.to_dict(include_metadata=include_metadata) for r in records]
        return json.dumps(payload, sort_keys=True, indent=1) + "\n"
    rows = bound_rows(records) if what == "bounds" else spectrum_rows(records)
    columns = CSV_COLUMNS if what == "bounds" else SPECTRUM_COLUMNS
    if not rows:
        raise EmitError(f"no {'bound reports' if what == 'bounds' else 'eigenvalues'} to emit")
    if fmt == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] if isinstance(row[c], (str, int)) and not isinstance(row[c], bool)
                             else _g17(row[c]) for c in columns])
        return buf.getvalue()
    if fmt == "table":
        if what == "bounds":
            rows = sorted(rows, key=lambda r: (r["inequality"], r["Lambda"]))
        cells = [[str(row[c]) if isinstance(row[c], (str, int)) else _g6(row[c]) for c in columns] for row in rows]
        widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
        out = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
        out.append("  ".join("-" * w for w in widths))
        out += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in cells]
        return "\n".join(out) + "\n"
    raise EmitError(f"unknown format '{fmt}' (expected csv, json or table)")


def emit(records, fmt: str = "csv", out=None, what: str = "bounds", include_metadata: bool = True) -> str:
    """Render and write to ``out`` (path) or return the text when ``out`` is None."""
    text = render(records, fmt, what, include_metadata)
    if out is not None:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise EmitError(f"cannot write output to {out}: {exc.strerror}") from exc
    return text


__all__ = [
    "ScenarioFileError",
    "ScenarioError",
    "EmitError",
    "parse_scenario",
    "parse_scenario_text",
    "scenario_to_toml",
    "render",
    "emit",
    "CSV_COLUMNS",
]
