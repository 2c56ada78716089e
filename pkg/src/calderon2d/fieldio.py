"""Field files and conductivity specifications.

Field file format: a raw binary array of little-endian 64-bit floats in
row-major order, shaped (ncomponents, n, n), with a sidecar text record
`<file>.meta` naming the grid (L, n), the component planes and the mask
reference.  Complex fields are stored as two planes `<name>.re` and
`<name>.im`.

Conductivity specification: a line-oriented key=value text naming either
a closed-form preset (identity, constant tensor with three entries,
radial profile) or a sampled-field file path.
"""

from __future__ import annotations

import os

import numpy as np

from .fields import ConductivityTensor
from .grids import DiscRegion, GridSpec


def write_field(path: str, grid: GridSpec, components: dict,
                mask: np.ndarray | None = None) -> None:
    names = []
    planes = []
    for name, arr in components.items():
        arr = np.asarray(arr)
        if np.iscomplexobj(arr):
            names += [f"{name}.re", f"{name}.im"]
            planes += [arr.real, arr.imag]
        else:
            names.append(name)
            planes.append(arr.astype(float))
    data = np.stack(planes).astype("<f8")
    data.tofile(path)
    mask_ref = "none"
    if mask is not None:
        mask_ref = os.path.basename(path) + ".mask"
        np.asarray(mask, dtype="<f8").tofile(
            os.path.join(os.path.dirname(path) or ".", mask_ref))
    with open(path + ".meta", "w") as f:
        f.write(f"L={grid.L!r}\n")
        f.write(f"n={grid.n}\n")
        f.write(f"components={','.join(names)}\n")
        f.write(f"mask={mask_ref}\n")


def read_field(path: str):
    meta = {}
    with open(path + ".meta") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            meta[key.strip()] = val.strip()
    grid = GridSpec(float(meta["L"]), int(meta["n"]))
    names = meta["components"].split(",")
    raw = np.fromfile(path, dtype="<f8")
    n = grid.n
    planes = raw.reshape(len(names), n, n)
    fields = {}
    i = 0
    while i < len(names):
        name = names[i]
        if name.endswith(".re") and i + 1 < len(names) \
                and names[i + 1] == name[:-3] + ".im":
            fields[name[:-3]] = planes[i] + 1j * planes[i + 1]
            i += 2
        else:
            fields[name] = planes[i].copy()
            i += 1
    mask = None
    if meta.get("mask", "none") != "none":
        mpath = os.path.join(os.path.dirname(path) or ".", meta["mask"])
        mask = np.fromfile(mpath, dtype="<f8").reshape(n, n) > 0.5
    return grid, fields, mask


def parse_kv_text(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def sigma_from_spec(spec: dict, grid: GridSpec) -> ConductivityTensor:
    """Build a conductivity from a parsed specification record."""
    if "field" in spec:
        fgrid, fields, mask = read_field(spec["field"])
        if (fgrid.L, fgrid.n) != (grid.L, grid.n):
            raise ValueError(
                f"field file grid ({fgrid.L}, {fgrid.n}) does not match the "
                f"requested grid ({grid.L}, {grid.n})")
        return ConductivityTensor.from_fields(
            fgrid, fields["s11"], fields["s12"], fields["s22"], mask=mask)
    preset = spec.get("preset", "identity")
    if preset == "identity":
        return ConductivityTensor.identity(grid)
    if preset == "constant":
        region = DiscRegion(
            complex(float(spec.get("cx", 0.0)), float(spec.get("cy", 0.0))),
            float(spec.get("radius", 1.0)))
        return ConductivityTensor.constant(
            grid, float(spec["s11"]), float(spec.get("s12", 0.0)),
            float(spec["s22"]), region)
    if preset == "radial":
        return ConductivityTensor.radial(
            grid, amplitude=float(spec.get("amplitude", 1.0)),
            radius=float(spec.get("radius", 1.0)))
    raise ValueError(f"unknown conductivity preset {preset!r}")


def load_sigma_spec(path: str, grid: GridSpec) -> ConductivityTensor:
    if not os.path.exists(path):
        raise FileNotFoundError(f"conductivity specification not found: {path}")
    with open(path) as f:
        return sigma_from_spec(parse_kv_text(f.read()), grid)
