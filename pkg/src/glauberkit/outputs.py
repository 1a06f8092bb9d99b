"""CSV tables, P2 snapshots and a digest manifest."""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MANIFEST = "manifest.txt"


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def add(self, **row):
        self.rows.append(row)


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class RunResult:
    experiment: str
    tables: dict = field(default_factory=dict)
    snapshots: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = "") -> Check:
        c = Check(name, bool(ok), detail)
        self.checks.append(c)
        return c

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return "" if v is None else str(v)


def csv_text(table: Table, header: list[str]) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_fmt(r.get(c)) for c in table.columns])
    return buf.getvalue()


def pgm_text(grid: np.ndarray) -> str:
    """Plain P2 with maxval 1: -1 -> 0, +1 -> 1.  ``grid[0]`` is the top row."""
    g = (np.asarray(grid) > 0).astype(int)
    h, w = g.shape
    lines = ["P2", f"{w} {h}", "1"] + [" ".join(map(str, row)) for row in g]
    return "\n".join(lines) + "\n"


def snapshot_grid(cfg) -> np.ndarray:
    """Spin grid with north up (highest y in the first row)."""
    return cfg.domain.grid_view(cfg.spins)[::-1]


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def emit_outputs(result: RunResult, header: list[str], out_dir) -> list[Path]:
    """Write every table and snapshot plus a manifest; returns the data files."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out}: {e}") from e
    files = []
    head = [f"# experiment: {result.experiment}"] + header
    for name in sorted(result.tables):
        p = out / f"{name}.csv"
        p.write_text(csv_text(result.tables[name], head))
        files.append(p)
    if result.checks:
        t = Table(["check", "ok", "detail"], [{"check": c.name, "ok": c.ok, "detail": c.detail}
                                             for c in result.checks])
        p = out / "checks.csv"
        p.write_text(csv_text(t, head))
        files.append(p)
    if result.snapshots:
        (out / "snapshots").mkdir(exist_ok=True)
    for name in sorted(result.snapshots):
        p = out / "snapshots" / f"{name}.pgm"
        p.write_text(pgm_text(result.snapshots[name]))
        files.append(p)
    lines = [f"{sha256_file(f)}  {f.relative_to(out).as_posix()}" for f in files]
    (out / MANIFEST).write_text("".join(line + "\n" for line in lines))
    return files


def read_manifest(out_dir) -> dict:
    out = {}
    for line in (Path(out_dir) / MANIFEST).read_text().splitlines():
        digest, name = line.split("  ", 1)
        out[name] = digest
    return out
