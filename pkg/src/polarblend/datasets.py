"""Bundled reference datasets and material files.

Every bundled file is pinned by a SHA-256 digest; loading a file whose
content no longer matches raises :class:`DatasetIntegrityError`.
"""

from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import DatasetIntegrityError, InvalidMaterialError
from .polar import PanelVars, PlyMaterial, PolarQuad, PolarShear

CHECKSUMS = {
    "t300_5208.json": "1ced4d11379f3bf132b5b8cf7b52946dec0ca96b0edcfd8266f3e54df6e5e6a1",
    "optimal_panels.json": "3ca22ca388bf8ec292873f9ba2ea51a54ab6d8893a78914561473f6628c29cae",
    "fixed_properties.json": "2c06e1c62864c0ebef7772f2b99161f4ec654223e18a6322aa25fb8204d22758",
    "recovered_stacks.json": "36dcacc29fa3e77d0c26b9d072c91c639fed8e1356a6d1b750990519dda8de1f",
}


def _data_path(name: str):
    return resources.files("polarblend").joinpath("data").joinpath(name)


def sha256_of(name: str) -> str:
    return hashlib.sha256(_data_path(name).read_bytes()).hexdigest()


def verify_checksums() -> dict[str, bool]:
    return {name: sha256_of(name) == digest for name, digest in CHECKSUMS.items()}


@lru_cache(maxsize=None)
def load_bundled(name: str) -> dict[str, Any]:
    if not name.endswith(".json"):
        name += ".json"
    if name not in CHECKSUMS:
        raise KeyError(f"no bundled dataset named {name!r}")
    raw = _data_path(name).read_bytes()
    if hashlib.sha256(raw).hexdigest() != CHECKSUMS[name]:
        raise DatasetIntegrityError(f"checksum mismatch for bundled dataset {name}")
    return json.loads(raw)


def _quad(d: dict) -> PolarQuad:
    return PolarQuad(d["T0"], d["T1"], d["R0"], d["R1"], d.get("Phi0", 0.0), d.get("Phi1", 0.0))


def _shear(d: dict) -> PolarShear:
    return PolarShear(d["T"], d["R"], d.get("Phi", 0.0))


def material_from_dict(d: dict[str, Any]) -> PlyMaterial:
    try:
        return PlyMaterial(
            name=d.get("name", "material"),
            E1=float(d["E1"]), E2=float(d["E2"]), G12=float(d["G12"]),
            G23=float(d["G23"]), G13=float(d["G13"]),
            nu12=float(d["nu12"]), nu23=float(d["nu23"]), nu13=float(d["nu13"]),
            polar_Q=_quad(d["polar_Q"]), polar_Qhat=_shear(d["polar_Qhat"]),
            polar_G=_quad(d["polar_G"]) if "polar_G" in d else None,
            polar_Ghat=_shear(d["polar_Ghat"]) if "polar_Ghat" in d else None,
            rho_ply=float(d["rho_ply"]), t_ply=float(d["t_ply"]), N_ref=int(d["N_ref"]),
            X=d.get("X"), Y=d.get("Y"), S12=d.get("S12"), S23=d.get("S23"), S13=d.get("S13"),
        )
    except KeyError as exc:
        raise InvalidMaterialError(f"material file is missing field {exc.args[0]!r}") from None


def material_to_dict(m: PlyMaterial) -> dict[str, Any]:
    q, qh = m.polar_Q, m.polar_Qhat
    out = {
        "name": m.name,
        "units": {"modulus": "MPa", "angle": "deg", "density": "kg/mm^3", "thickness": "mm"},
        "E1": m.E1, "E2": m.E2, "G12": m.G12, "G23": m.G23, "G13": m.G13,
        "nu12": m.nu12, "nu23": m.nu23, "nu13": m.nu13,
        "polar_Q": {"T0": q.T0, "T1": q.T1, "R0": q.R0, "R1": q.R1, "Phi0": q.Phi0, "Phi1": q.Phi1},
        "polar_Qhat": {"T": qh.T, "R": qh.R, "Phi": qh.Phi},
        "rho_ply": m.rho_ply, "t_ply": m.t_ply, "N_ref": m.N_ref,
    }
    if m.polar_G is not None:
        g = m.polar_G
        out["polar_G"] = {"T0": g.T0, "T1": g.T1, "R0": g.R0, "R1": g.R1, "Phi0": g.Phi0, "Phi1": g.Phi1}
    if m.polar_Ghat is not None:
        out["polar_Ghat"] = {"T": m.polar_Ghat.T, "R": m.polar_Ghat.R, "Phi": m.polar_Ghat.Phi}
    for key in ("X", "Y", "S12", "S23", "S13"):
        if getattr(m, key) is not None:
            out[key] = getattr(m, key)
    return out


def load_material(source: str | Path = "t300_5208") -> PlyMaterial:
    """Load a material by bundled name or from a JSON file path."""
    path = Path(source)
    if path.suffix == ".json" and path.exists():
        return material_from_dict(json.loads(path.read_text()))
    return material_from_dict(load_bundled(str(source)))


def t300_5208() -> PlyMaterial:
    return load_material("t300_5208")


def optimal_panels() -> dict[int, tuple[int, PanelVars]]:
    """Panel id -> (N, PanelVars) for the bundled optimal first-level design."""
    data = load_bundled("optimal_panels")
    n_ref = t300_5208().N_ref
    return {
        p["id"]: (p["N"], PanelVars(p["N"] / n_ref, p["rho0K"], p["rho1"], p["phi1"]))
        for p in data["panels"]
    }


def fixed_properties() -> dict[str, dict[str, Any]]:
    return {lam["id"]: lam for lam in load_bundled("fixed_properties")["laminates"]}


def recovered_stacks() -> dict[str, Any]:
    return load_bundled("recovered_stacks")
