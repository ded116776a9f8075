"""CSV ingestion and the plain-text model file.

Model file layout (all floats written with ``repr`` so they round-trip
exactly)::

    igmdsr-model 1
    variant nmf
    widths 12 8 5 3
    seed 0
    matrix means 1 6
    <row of values separated by spaces>
    matrix stds 1 6
    ...
    matrix V1 12 8
    ...
    end
"""

import csv
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import ModelParams, Variant

FORMAT_TAG = "igmdsr-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class SavedModel:
    params: ModelParams
    variant: Variant
    seed: int
    means: np.ndarray
    stds: np.ndarray

    @property
    def raw_cols(self):
        return self.means.shape[0]


def atomic_write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path, header=False, labels_col=None):
    """Read a numeric CSV. Returns ``(U, labels)``; ``labels`` is None unless
    ``labels_col`` (0-based) is given, in which case that column is kept as strings."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    start = 1 if header else 0
    rows = [(lineno, row) for lineno, row in enumerate(rows[start:], start=start + 1) if row]
    if not rows:
        raise InputError(f"{path}: no data rows")

    width = len(rows[0][1])
    values, labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise InputError(f"{path}: line {lineno} has {len(row)} fields, expected {width}")
        if labels_col is not None:
            if not 0 <= labels_col < width:
                raise InputError(f"{path}: label column {labels_col} out of range for {width} columns")
            labels.append(row[labels_col].strip())
            row = row[:labels_col] + row[labels_col + 1 :]
        parsed = []
        for col, cell in enumerate(row, start=1):
            try:
                x = float(cell)
            except ValueError:
                raise InputError(f"{path}: non-numeric value {cell!r} at line {lineno}, column {col}") from None
            if not np.isfinite(x):
                raise InputError(f"{path}: non-finite value {cell!r} at line {lineno}, column {col}")
            parsed.append(x)
        values.append(parsed)
    U = np.array(values, dtype=np.float64)
    if U.ndim != 2 or U.shape[1] == 0:
        raise InputError(f"{path}: no numeric feature columns")
    return U, (labels if labels_col is not None else None)


def format_matrix_csv(M):
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in M)


def _matrix_block(name, M):
    M = np.atleast_2d(M)
    lines = [f"matrix {name} {M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in M]
    return lines


def dumps_model(saved):
    p = saved.params
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"variant {saved.variant.value}",
        "widths " + " ".join(str(w) for w in p.widths),
        f"seed {saved.seed}",
    ]
    lines += _matrix_block("means", saved.means.reshape(1, -1))
    lines += _matrix_block("stds", saved.stds.reshape(1, -1))
    for name, M in zip(p.names(), p.matrices()):
        lines += _matrix_block(name, M)
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(path, saved):
    atomic_write_text(path, dumps_model(saved))


def loads_model(text, source="<model>"):
    lines = text.splitlines()
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise InputError(f"{source}: unexpected end of file")
        pos += 1
        return lines[pos - 1].split()

    def fail(msg):
        raise InputError(f"{source}: line {pos}: {msg}")

    head = take()
    if head != [FORMAT_TAG, str(FORMAT_VERSION)]:
        fail(f"not an {FORMAT_TAG} v{FORMAT_VERSION} file")
    meta = {}
    for key in ("variant", "widths", "seed"):
        fields = take()
        if not fields or fields[0] != key:
            fail(f"expected '{key}' line")
        meta[key] = fields[1:]
    try:
        variant = Variant(meta["variant"][0])
        widths = [int(w) for w in meta["widths"]]
        seed = int(meta["seed"][0])
    except (ValueError, IndexError):
        fail("malformed header")

    blocks = {}
    order = []
    while True:
        fields = take()
        if fields == ["end"]:
            break
        if len(fields) != 4 or fields[0] != "matrix":
            fail("expected 'matrix <name> <rows> <cols>' or 'end'")
        name, rows, cols = fields[1], int(fields[2]), int(fields[3])
        data = []
        for _ in range(rows):
            row = take()
            if len(row) != cols:
                fail(f"matrix {name}: expected {cols} values")
            try:
                data.append([float(x) for x in row])
            except ValueError:
                fail(f"matrix {name}: non-numeric value")
        blocks[name] = np.array(data, dtype=np.float64).reshape(rows, cols)
        order.append(name)

    s = len(widths) - 1
    expected = ["means", "stds"] + [f"V{l}" for l in range(1, s + 1)] + [f"Vtilde{l}" for l in range(2, s + 1)] + ["W"]
    if order != expected:
        raise InputError(f"{source}: matrix blocks {order}, expected {expected}")
    params = ModelParams.from_matrices([blocks[n] for n in expected[2:]])
    if list(params.widths) != widths:
        raise InputError(f"{source}: weights imply widths {list(params.widths)}, header says {widths}")
    return SavedModel(params, variant, seed, blocks["means"][0], blocks["stds"][0])


def load_model(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from exc
    return loads_model(text, source=path)
