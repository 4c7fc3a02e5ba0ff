"""Readers for the sweep CSV files.

Files carry ``# key = value`` provenance lines, then a header row, then
``%.12e`` data rows.  Readers fail loudly, naming the offending file and
column, and never guess at missing structure.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError


@dataclass
class Table:
    path: str
    meta: dict
    columns: list[str]
    data: dict

    def require(self, *names: str) -> None:
        for name in names:
            if name not in self.columns:
                raise SchemaError(f"{self.path}: missing column {name!r} "
                                  f"(found {', '.join(self.columns)})")

    def numeric(self, name: str) -> np.ndarray:
        self.require(name)
        try:
            return np.asarray([float(v) for v in self.data[name]])
        except ValueError as exc:
            raise SchemaError(f"{self.path}: column {name!r} is not numeric: {exc}") from exc

    def strings(self, name: str) -> np.ndarray:
        self.require(name)
        return np.asarray(self.data[name])


def read_table(path: str) -> Table:
    if not os.path.exists(path):
        raise SchemaError(f"input file does not exist: {path}")
    meta = {}
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise SchemaError(f"{path}: row has {len(cells)} cells, "
                                  f"header has {len(header)}")
            rows.append(cells)
    if not meta:
        raise SchemaError(f"{path}: no provenance header lines ('# key = value')")
    if header is None:
        raise SchemaError(f"{path}: no header row")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = {name: [row[i] for row in rows] for i, name in enumerate(header)}
    return Table(path=path, meta=meta, columns=header, data=data)


@dataclass
class WignerPanel:
    path: str
    meta: dict
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray


def read_wigner(path: str) -> WignerPanel:
    table = read_table(path)
    table.require("x", "p", "w")
    for key in ("nx", "np"):
        if key not in table.meta:
            raise SchemaError(f"{path}: missing metadata {key!r}")
    nx, npts = int(table.meta["nx"]), int(table.meta["np"])
    w = table.numeric("w")
    if w.size != nx * npts:
        raise SchemaError(f"{path}: {w.size} values do not fill a {npts}x{nx} grid")
    x = table.numeric("x").reshape(npts, nx)[0]
    p = table.numeric("p").reshape(npts, nx)[:, 0]
    return WignerPanel(path=path, meta=table.meta, x=x, p=p,
                       values=w.reshape(npts, nx))
