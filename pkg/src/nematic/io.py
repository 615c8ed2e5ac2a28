"""Checkpoint files and diagnostic CSV output.

Checkpoint layout (little endian throughout)::

    b"ELCS" | u32 version | u32 dim | u32 n[dim] | f64 t | rho | u[dim] | d[3]

Arrays are physical samples in row-major order, one component after another.
"""
from __future__ import annotations

import struct
from typing import IO, Iterable

import numpy as np

from .diagnostics import CSV_COLUMNS, EnergyReport
from .grid import PeriodicGrid
from .solver import State

MAGIC = b"ELCS"
VERSION = 1


class CheckpointError(ValueError):
    pass


def encode_checkpoint(s: State) -> bytes:
    g = s.grid
    head = MAGIC + struct.pack("<II", VERSION, g.dim) + struct.pack(f"<{g.dim}I", *g.n) + struct.pack("<d", s.t)
    rho, u, d = s.physical_arrays()
    body = [rho[None], u, d]
    return head + b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in body)


def decode_checkpoint(buf: bytes, M1: float | None = None, M2: float | None = None,
                      dealias: float = 2.0) -> State:
    if len(buf) < 12 or buf[:4] != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    version, dim = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if dim not in (2, 3):
        raise CheckpointError(f"bad dimension {dim}")
    off = 12
    n = struct.unpack_from(f"<{dim}I", buf, off)
    off += 4 * dim
    (t,) = struct.unpack_from("<d", buf, off)
    off += 8
    grid = PeriodicGrid(dim, n, dealias)
    ncomp = 1 + dim + 3
    count = ncomp * grid.size
    if len(buf) != off + 8 * count:
        raise CheckpointError("checkpoint size does not match its header")
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=off).astype(float).reshape((ncomp,) + grid.shape)
    rho, u, d = data[0], data[1:1 + dim], data[1 + dim:]
    return State(
        grid, grid.fft(rho), grid.fft(u), grid.fft(d), t,
        float(rho.min()) if M1 is None else M1, float(rho.max()) if M2 is None else M2,
        phys=(rho.copy(), u.copy(), d.copy()),
    )


def save_checkpoint(path: str, s: State) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(s))


def load_checkpoint(path: str, **kw) -> State:
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read(), **kw)


def format_row(values: Iterable[float]) -> str:
    return ",".join("%.17g" % v for v in values)


def write_csv(fh: IO[str], reports: Iterable[EnergyReport], header: bool = True, comments=()) -> None:
    for c in comments:
        fh.write(f"# {c}\n")
    if header:
        fh.write(",".join(CSV_COLUMNS) + "\n")
    for r in reports:
        fh.write(format_row(r.csv_row()) + "\n")


def read_csv(path: str) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    cols = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(cols))
    return {c: data[:, i] for i, c in enumerate(cols)}
