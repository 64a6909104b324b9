"""Reading and writing project files.

Panel, target and edge tables are JSON or CSV (picked by file suffix).
JSON files carry a ``units`` object; CSV files start with a
``# units: key=unit, ...`` comment line.  Units, when given, must match
the expected ones.  Stacks are written one panel per line in
slash-separated notation, optionally followed by residual columns.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Hashable, Iterable, Mapping

import numpy as np

from .criteria import StructuralResponse
from .errors import InputFormatError, StackParseError
from .notation import format_stack, parse_stack
from .polar import PanelVars, StackingSequence
from .recovery.residuals import ResidualBreakdown, TargetPolar

PANEL_UNITS = {"n0": "-", "rho0K": "-", "rho1": "-", "phi1": "-", "area": "mm^2"}
TARGET_UNITS = {"N": "plies", "rho0K": "-", "rho1": "-", "phi1": "-"}
RESPONSE_UNITS = {"lam": "-", "u": "mm", "membrane": "-", "curvature": "1/mm", "shear": "-"}


def _ident(v: Any) -> Hashable:
    if isinstance(v, str):
        s = v.strip()
        if s.lstrip("-").isdigit():
            return int(s)
        return s
    return v


def _check_units(found: Mapping[str, str] | None, expected: Mapping[str, str], path) -> None:
    if not found:
        return
    for key, unit in found.items():
        if key in expected and str(unit).strip() != expected[key]:
            raise InputFormatError(f"{path}: column {key!r} has unit {unit!r}, expected {expected[key]!r}")


def _fmt(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix in (".json",):
        return "json"
    if suffix in (".csv",):
        return "csv"
    raise InputFormatError(f"{path}: unsupported file type {suffix!r} (use .json or .csv)")


def _read_csv(path: Path) -> tuple[list[dict], dict]:
    units: dict = {}
    lines = []
    for line in path.read_text().splitlines():
        s = line.strip()
        if s.startswith("#"):
            body = s.lstrip("#").strip()
            if body.lower().startswith("units:"):
                for part in body[6:].split(","):
                    if "=" in part:
                        k, u = part.split("=", 1)
                        units[k.strip()] = u.strip()
            continue
        if s:
            lines.append(line)
    return list(csv.DictReader(lines)), units


def _units_line(units: Mapping[str, str]) -> str:
    return "# units: " + ", ".join(f"{k}={v}" for k, v in units.items())


def _float(row: Mapping, key: str, path, default=None) -> float:
    if key not in row or row[key] in (None, ""):
        if default is not None:
            return default
        raise InputFormatError(f"{path}: missing field {key!r} in record {dict(row)}")
    try:
        return float(row[key])
    except (TypeError, ValueError):
        raise InputFormatError(f"{path}: field {key!r} is not a number: {row[key]!r}") from None


# panels ---------------------------------------------------------------

def read_panels(path: str | Path) -> tuple[dict, dict, int | None]:
    """-> ({id: PanelVars}, {id: area}, N_ref or None)."""
    path = Path(path)
    if _fmt(path) == "json":
        data = json.loads(path.read_text())
        rows, units, N_ref = data.get("panels", []), data.get("units"), data.get("N_ref")
    else:
        rows, units = _read_csv(path)
        N_ref = None
    _check_units(units, PANEL_UNITS, path)
    panels, areas = {}, {}
    for r in rows:
        pid = _ident(r.get("id"))
        if pid in panels:
            raise InputFormatError(f"{path}: duplicate panel id {pid!r}")
        panels[pid] = PanelVars(_float(r, "n0", path), _float(r, "rho0K", path), _float(r, "rho1", path),
                                _float(r, "phi1", path, 0.0))
        areas[pid] = _float(r, "area", path, 0.0)
    if not panels:
        raise InputFormatError(f"{path}: no panels")
    return panels, areas, None if N_ref is None else int(N_ref)


def write_panels(path: str | Path, panels: Mapping[Hashable, PanelVars], N_ref: int | None = None,
                 areas: Mapping[Hashable, float] | None = None) -> None:
    path = Path(path)
    rows = []
    for pid, p in panels.items():
        row = {"id": pid, "n0": p.n0, "rho0K": p.rho0K, "rho1": p.rho1, "phi1": p.phi1}
        if N_ref is not None:
            row["N"] = int(round(p.n0 * N_ref))
        if areas is not None:
            row["area"] = areas.get(pid, 0.0)
        rows.append(row)
    if _fmt(path) == "json":
        out = {"units": PANEL_UNITS, "panels": rows}
        if N_ref is not None:
            out["N_ref"] = N_ref
        path.write_text(json.dumps(out, indent=2) + "\n")
    else:
        buf = io.StringIO()
        buf.write(_units_line(PANEL_UNITS) + "\n")
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        path.write_text(buf.getvalue())


# targets --------------------------------------------------------------

def read_targets(path: str | Path) -> dict:
    """-> {id: TargetPolar}."""
    path = Path(path)
    if _fmt(path) == "json":
        data = json.loads(path.read_text())
        rows, units = data.get("targets", []), data.get("units")
    else:
        rows, units = _read_csv(path)
    _check_units(units, TARGET_UNITS, path)
    out = {}
    for r in rows:
        N = _float(r, "N", path)
        if N != int(N):
            raise InputFormatError(f"{path}: target ply count {N} is not an integer")
        out[_ident(r.get("id"))] = TargetPolar.from_signed(
            _float(r, "rho0K", path), _float(r, "rho1", path), _float(r, "phi1", path, 0.0), int(N))
    if not out:
        raise InputFormatError(f"{path}: no targets")
    return out


def write_targets(path: str | Path, targets: Mapping[Hashable, TargetPolar]) -> None:
    path = Path(path)
    rows = [{"id": k, "N": t.N, "rho0K": t.rho0K, "rho1": t.rho1, "phi1": t.phi1} for k, t in targets.items()]
    if _fmt(path) == "json":
        path.write_text(json.dumps({"units": TARGET_UNITS, "targets": rows}, indent=2) + "\n")
    else:
        buf = io.StringIO()
        buf.write(_units_line(TARGET_UNITS) + "\n")
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        path.write_text(buf.getvalue())


# adjacency ------------------------------------------------------------

def read_edges(path: str | Path) -> list[tuple]:
    path = Path(path)
    if _fmt(path) == "json":
        data = json.loads(path.read_text())
        raw = data["edges"] if isinstance(data, dict) else data
        edges = [(_ident(e[0]), _ident(e[1])) for e in raw]
    else:
        rows, _ = _read_csv(path)
        try:
            edges = [(_ident(r["p"]), _ident(r["q"])) for r in rows]
        except KeyError:
            raise InputFormatError(f"{path}: edge table needs columns p,q") from None
    return edges


def write_edges(path: str | Path, edges: Iterable[tuple]) -> None:
    path = Path(path)
    edges = [list(e) for e in edges]
    if _fmt(path) == "json":
        path.write_text(json.dumps({"edges": edges}) + "\n")
    else:
        path.write_text("p,q\n" + "".join(f"{p},{q}\n" for p, q in edges))


# structural responses -------------------------------------------------

def read_response(path: str | Path) -> StructuralResponse:
    """JSON response file: ``lam``, ``u`` and ``eps_gen`` rows of 8 values.

    ``eps_gen`` rows are ordered (eps_xx, eps_yy, gamma_xy, k_xx, k_yy,
    k_xy, gamma_xz, gamma_yz).
    """
    path = Path(path)
    data = json.loads(path.read_text())
    _check_units(data.get("units"), RESPONSE_UNITS, path)
    try:
        return StructuralResponse(
            lam=data.get("lam"), u=data.get("u"),
            eps_gen=None if data.get("eps_gen") is None else np.asarray(data["eps_gen"], dtype=float),
            source=data.get("source", str(path)),
        )
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


# stacks ---------------------------------------------------------------

def format_stack_table(stacks: Mapping[Hashable, StackingSequence],
                       breakdowns: Mapping[Hashable, ResidualBreakdown] | None = None) -> str:
    """CSV table: id, N, stack and (optionally) residual columns."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["id", "N", "stack"]
    if breakdowns is not None:
        head += ["R1", "R2", "R3", "R4", "R5", "R6", "total"]
    w.writerow(head)
    for pid, s in stacks.items():
        row = [pid, s.N, format_stack(s)]
        if breakdowns is not None:
            b = breakdowns[pid]
            row += [f"{r:.6e}" for r in b.terms] + [f"{b.total:.6e}"]
        w.writerow(row)
    return buf.getvalue()


def write_stacks(path: str | Path, stacks: Mapping[Hashable, StackingSequence],
                 breakdowns: Mapping[Hashable, ResidualBreakdown] | None = None) -> None:
    Path(path).write_text(format_stack_table(stacks, breakdowns))


def read_stacks(path: str | Path) -> dict:
    """Read a stack table (CSV with id and stack columns) or ``id: stack`` lines."""
    path = Path(path)
    text = path.read_text()
    first = next((ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")), "")
    out = {}
    if first.replace(" ", "").startswith("id,"):
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        for n, r in enumerate(csv.DictReader(lines), start=2):
            out[_ident(r["id"])] = parse_stack(r["stack"], line=n)
        return out
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if ":" in s:
            key, body = s.split(":", 1)
            out[_ident(key)] = parse_stack(body, line=n)
        else:
            out[len(out)] = parse_stack(s, line=n)
    if not out:
        raise StackParseError("file holds no stacks", text, 1, 1)
    return out
