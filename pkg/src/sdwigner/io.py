"""Result persistence: provenance-tagged tables and the binary state format.

Every file this module writes starts with the config hash so outputs can be
traced to the exact run description that produced them.  Text tables are for
inspection; the binary layout (docs/state_format.md) round-trips states at
full float64 precision and is byte-deterministic.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Sequence, Tuple

import numpy as np

from .phasespace import (PhysicalConstants, SampledEMField, make_grid)
from .transform import WignerState

MAGIC = b"SDWG"
FORMAT_VERSION = 1
NULL_HASH = "0" * 64


def _format_float(x: float) -> str:
    # shortest digits that round-trip float64; keeps files byte-deterministic
    return format(float(x), ".17g")


def write_table(path, columns: Sequence[str], rows: Iterable[Sequence[float]],
                config_hash: str = NULL_HASH) -> Path:
    """Tab-separated table with a provenance line and a units header."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_sha256={config_hash}",
             "# columns: " + "\t".join(columns)]
    for row in rows:
        lines.append("\t".join(v if isinstance(v, str) else _format_float(v)
                               for v in row))
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


def read_table(path) -> Tuple[str, list, np.ndarray]:
    """Inverse of write_table: (config hash, column names, value array).

    Tables are float-valued except for label columns (the magnitude report
    has one); those come back as an object array of strings and floats.
    """
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if len(text) < 2 or not text[0].startswith("# config_sha256="):
        raise ValueError(f"{path}: missing provenance header")
    config_hash = text[0].split("=", 1)[1]
    columns = text[1].removeprefix("# columns: ").split("\t")
    rows = [line.split("\t") for line in text[2:] if line]
    try:
        data = np.array([[float(v) for v in row] for row in rows], dtype=float)
    except ValueError:
        data = np.array([[_maybe_float(v) for v in row] for row in rows],
                        dtype=object)
    return config_hash, columns, data


def _maybe_float(cell: str):
    try:
        return float(cell)
    except ValueError:
        return cell


# ---------------------------------------------------------------------------
# binary states
# ---------------------------------------------------------------------------

def write_state(path, state: WignerState, config_hash: str = NULL_HASH) -> Path:
    """Serialize a state with enough geometry to rebuild its grid.

    Layout (little endian): magic "SDWG", u16 version, u16 dim, u32 n_p per
    axis, u32 n_x per axis, f64 coherence length per axis, f64 window extent
    per axis, f64 hbar/charge/mass, 64 ASCII hex chars of config hash, f64
    time, then the values row-major as f64.
    """
    grid = state.grid
    if len(config_hash) != 64:
        raise ValueError("config_hash must be 64 hex characters")
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    d = grid.dim
    head = [MAGIC, struct.pack("<HH", FORMAT_VERSION, d)]
    head.append(struct.pack(f"<{d}I", *grid.n_p))
    head.append(struct.pack(f"<{d}I", *grid.n_x))
    head.append(struct.pack(f"<{d}d", *grid.coherence_length))
    head.append(struct.pack(f"<{d}d", *grid.omega_extent))
    c = grid.constants
    head.append(struct.pack("<3d", c.hbar, c.charge, c.mass))
    head.append(config_hash.encode("ascii"))
    head.append(struct.pack("<d", state.time))
    payload = np.ascontiguousarray(state.values, dtype="<f8").tobytes()
    p.write_bytes(b"".join(head) + payload)
    return p


def read_state(path) -> Tuple[WignerState, str]:
    """Read a state file back into (WignerState, config hash)."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a state file (bad magic)")
    version, d = struct.unpack_from("<HH", raw, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    off = 8
    n_p = struct.unpack_from(f"<{d}I", raw, off); off += 4 * d
    n_x = struct.unpack_from(f"<{d}I", raw, off); off += 4 * d
    L = struct.unpack_from(f"<{d}d", raw, off); off += 8 * d
    omega = struct.unpack_from(f"<{d}d", raw, off); off += 8 * d
    hbar, charge, mass = struct.unpack_from("<3d", raw, off); off += 24
    config_hash = raw[off:off + 64].decode("ascii"); off += 64
    (time,) = struct.unpack_from("<d", raw, off); off += 8
    constants = PhysicalConstants(hbar=hbar, charge=charge, mass=mass)
    if d == 1:
        grid = make_grid(1, L[0], omega[0], int(n_x[0]), int(n_p[0]), constants)
    else:
        grid = make_grid(d, L, omega, tuple(int(v) for v in n_x),
                         tuple(int(v) for v in n_p), constants)
    count = int(np.prod(grid.state_shape))
    if len(raw) - off != 8 * count:
        raise ValueError(f"{path}: payload holds {(len(raw) - off) // 8} values, "
                         f"grid needs {count}")
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=off)
    values = values.reshape(grid.state_shape).astype(float)
    return WignerState(grid=grid, values=values, time=time), config_hash


def relative_l2_diff(a: WignerState, b: WignerState) -> float:
    """Relative L2 distance between two states on matching grids."""
    ga, gb = a.grid, b.grid
    if ga.state_shape != gb.state_shape:
        raise ValueError(f"state shapes differ: {ga.state_shape} vs {gb.state_shape}")
    for name in ("coherence_length", "omega_extent"):
        if not np.allclose(getattr(ga, name), getattr(gb, name), rtol=1e-12):
            raise ValueError(f"grid {name} differs between the two states")
    denom = np.linalg.norm(b.values)
    if denom == 0.0:
        return float(np.linalg.norm(a.values))
    return float(np.linalg.norm(a.values - b.values) / denom)


# ---------------------------------------------------------------------------
# sampled fields
# ---------------------------------------------------------------------------

def save_sampled_field(path, field: SampledEMField) -> Path:
    """Store a tabulated field as npz (axis_0..axis_{d-1}, electric, magnetic)."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    arrays = {f"axis_{k}": np.asarray(a, dtype=float)
              for k, a in enumerate(field.axes)}
    arrays["electric"] = np.asarray(field.electric_samples, dtype=float)
    arrays["magnetic"] = np.asarray(field.magnetic_samples, dtype=float)
    np.savez(p, **arrays)
    return p


def load_sampled_field(path) -> SampledEMField:
    """Inverse of save_sampled_field."""
    with np.load(Path(path)) as data:
        axes = []
        k = 0
        while f"axis_{k}" in data:
            axes.append(np.array(data[f"axis_{k}"], dtype=float))
            k += 1
        if not axes or "electric" not in data or "magnetic" not in data:
            raise ValueError(f"{path}: expected axis_0.., electric, magnetic arrays")
        return SampledEMField(axes=tuple(axes),
                              electric_samples=np.array(data["electric"]),
                              magnetic_samples=np.array(data["magnetic"]))
