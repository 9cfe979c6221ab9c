"""Plain-text checkpoints.

Layout::

    quditvqc-checkpoint 1
    kind qudit-vqc
    meta d 9
    meta layers 8
    array phi 8 80
    <values of the last axis on one line, 17 significant digits>
    ...
    end

Every float is written with ``%.17g``, so reading a file back gives the
exact same arrays.
"""
from pathlib import Path

import numpy as np

from .algebra import build_generator_basis
from .data import Standardizer
from .errors import ParseError
from .models import BatchedQae, DenseNn, Qae, QubitVqc, QuditVqc

MAGIC = "quditvqc-checkpoint"
VERSION = 1


def _fmt(v):
    return format(float(v), ".17g")


def dumps(kind, meta, arrays):
    lines = [f"{MAGIC} {VERSION}", f"kind {kind}"]
    for key, value in meta.items():
        lines.append(f"meta {key} {'none' if value is None else value}")
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=np.float64)
        lines.append(f"array {name} {' '.join(str(n) for n in arr.shape)}".rstrip())
        rows = arr.reshape(-1, arr.shape[-1]) if arr.ndim else arr.reshape(1, 1)
        lines += [" ".join(_fmt(v) for v in row) for row in rows]
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads(text, path=None):
    """Inverse of :func:`dumps`: ``(kind, meta, arrays)``; meta values stay strings."""
    lines = text.splitlines()
    if not lines or lines[0].split() != [MAGIC, str(VERSION)]:
        raise ParseError(f"not a version {VERSION} checkpoint", path, 1)
    kind = None
    meta, arrays = {}, {}
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        i += 1
        if not parts:
            continue
        tag = parts[0]
        if tag == "end":
            break
        if tag == "kind" and len(parts) == 2:
            kind = parts[1]
        elif tag == "meta" and len(parts) >= 3:
            meta[parts[1]] = " ".join(parts[2:])
        elif tag == "array" and len(parts) >= 2:
            shape = tuple(int(n) for n in parts[2:])
            n_rows = int(np.prod(shape[:-1])) if len(shape) > 1 else 1
            values = []
            for _ in range(n_rows):
                if i >= len(lines):
                    raise ParseError(f"array {parts[1]} is truncated", path, i)
                try:
                    values += [float(v) for v in lines[i].split()]
                except ValueError:
                    raise ParseError(f"bad number in array {parts[1]}", path, i + 1) from None
                i += 1
            expected = int(np.prod(shape)) if shape else 1
            if len(values) != expected:
                raise ParseError(f"array {parts[1]} has {len(values)} values, expected {expected}", path, i)
            arrays[parts[1]] = np.array(values, dtype=np.float64).reshape(shape)
        else:
            raise ParseError(f"unrecognised line {lines[i - 1]!r}", path, i)
    else:
        raise ParseError("missing end marker", path, len(lines))
    if kind is None:
        raise ParseError("missing kind line", path)
    return kind, meta, arrays


def write(path, kind, meta, arrays):
    Path(path).write_text(dumps(kind, meta, arrays), encoding="utf-8", newline="\n")


def read(path):
    path = Path(path)
    if not path.is_file():
        raise ParseError("checkpoint not found", path)
    return loads(path.read_text(encoding="utf-8"), path)


def _opt_int(value):
    return None if value in (None, "none") else int(value)


def model_to_record(model):
    """``(kind, meta, arrays)`` for any single model or a :class:`Standardizer`."""
    if isinstance(model, Standardizer):
        return "standardizer", {"features": model.mean.size}, {"mean": model.mean, "std": model.std}
    meta = {"n_params": model.n_params}
    if isinstance(model, QuditVqc):
        meta.update(d=model.basis.d, D=model.basis.size, layers=model.layers,
                    n_inputs=model.n_inputs, perm_seed=model.basis.perm_seed)
        return model.kind, meta, {"phi": model.phi}
    if isinstance(model, QubitVqc):
        meta.update(qubits=model.qubits, layers=model.phi.shape[0], readout=model.readout)
        return model.kind, meta, {"phi": model.phi}
    if isinstance(model, Qae):
        meta.update(d=model.basis.d, D=model.basis.size, K=model.n_inputs)
        return model.kind, meta, {"w_enc": model.w_enc, "w_dec": model.w_dec}
    if isinstance(model, BatchedQae):
        meta.update(blocks=model.blocks, K=model.n_inputs, decoder_layers=len(model.w_dec))
        return model.kind, meta, model.trainable()
    if isinstance(model, DenseNn):
        meta.update(widths=",".join(str(w) for w in model.widths))
        return model.kind, meta, model.trainable()
    raise TypeError(f"cannot checkpoint {type(model).__name__}")


def model_from_record(kind, meta, arrays):
    if kind == "standardizer":
        return Standardizer(arrays["mean"], arrays["std"])
    if kind == "qudit-vqc":
        basis = build_generator_basis(int(meta["d"]), _opt_int(meta.get("perm_seed")))
        return QuditVqc(arrays["phi"], basis, _opt_int(meta.get("n_inputs")))
    if kind == "qubit-vqc":
        return QubitVqc(arrays["phi"], meta.get("readout", "first9"), int(meta.get("qubits", 4)))
    if kind == "qae":
        return Qae(arrays["w_enc"], arrays["w_dec"], build_generator_basis(int(meta["d"])))
    if kind == "batched-qae":
        n = int(meta["decoder_layers"])
        return BatchedQae(arrays["w_enc"], tuple(arrays[f"w_dec{i}"] for i in range(n)))
    if kind == "dense-nn":
        return DenseNn(tuple(arrays[f"w{i}"] for i in range(len(arrays))))
    raise ParseError(f"unknown checkpoint kind {kind!r}")


def save_model(path, model):
    write(path, *model_to_record(model))


def load_model(path):
    return model_from_record(*read(path))
