"""Binary matrix/classifier files, JSON manifests, and CSV reports.

All binary payloads are little-endian with fixed magic headers so
round-trips are bit-exact and failures are diagnosable by offset.
"""

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .circuit import PeriodicFunction
from .classifier import MLP, LabeledUnitaryCorpus

__all__ = [
    "DataFormatError",
    "UNITARY_MAGIC",
    "MLP_MAGIC",
    "RUN_MANIFEST_KEYS",
    "write_unitary",
    "read_unitary",
    "write_mlp",
    "read_mlp",
    "write_run_manifest",
    "read_run_manifest",
    "write_function",
    "read_function",
    "write_corpus",
    "read_corpus",
    "write_csv",
]

UNITARY_MAGIC = b"UMAT0001"
MLP_MAGIC = b"MLPC0001"

# 8-byte magic + n_qubits, rows, cols, reserved (u32 LE each)
_UNITARY_HEADER = struct.Struct("<8sIIII")

RUN_MANIFEST_KEYS = frozenset(
    ["n", "m", "ancilla", "k", "alpha", "beta1", "beta2", "epsilon",
     "epochs", "seed", "dataset", "loss_history"]
)


class DataFormatError(ValueError):
    """A persisted artifact is malformed (wrong magic, truncation, bad shape)."""


def write_unitary(path, m3, n_qubits: int) -> None:
    """UMAT0001 file: header then row-major (re, im) float64 LE pairs."""
    m3 = np.ascontiguousarray(m3, dtype=np.complex128)
    dim = 2 ** n_qubits
    if m3.shape != (dim, dim):
        raise ValueError(f"matrix shape {m3.shape} does not match n_qubits={n_qubits}")
    if not np.all(np.isfinite(m3.view(np.float64))):
        raise ValueError("refusing to write non-finite matrix entries")
    header = _UNITARY_HEADER.pack(UNITARY_MAGIC, n_qubits, dim, dim, 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(m3.astype("<c16", copy=False).tobytes())


def read_unitary(path):
    """Returns (matrix, n_qubits); raises DataFormatError on any malformation."""
    blob = Path(path).read_bytes()
    if len(blob) < _UNITARY_HEADER.size:
        raise DataFormatError(
            f"{path}: truncated header ({len(blob)} bytes, need {_UNITARY_HEADER.size})"
        )
    magic, n_qubits, rows, cols, _ = _UNITARY_HEADER.unpack_from(blob, 0)
    if magic != UNITARY_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r} at offset 0")
    if rows != cols or rows != 2 ** n_qubits:
        raise DataFormatError(
            f"{path}: header claims {rows}x{cols} for n_qubits={n_qubits}"
        )
    expected = _UNITARY_HEADER.size + rows * cols * 16
    if len(blob) != expected:
        raise DataFormatError(f"{path}: length {len(blob)} != expected {expected}")
    flat = np.frombuffer(blob, dtype="<c16", offset=_UNITARY_HEADER.size)
    m3 = flat.reshape(rows, cols).astype(np.complex128)
    if not np.all(np.isfinite(m3.view(np.float64))):
        raise DataFormatError(f"{path}: non-finite matrix entries")
    return m3, n_qubits


def write_mlp(path, net: MLP) -> None:
    """MLPC0001 file: layer count, dims, then per-layer weights and biases."""
    dims = [net.weights[0].shape[0]] + [w.shape[1] for w in net.weights]
    with open(path, "wb") as fh:
        fh.write(MLP_MAGIC)
        fh.write(struct.pack("<I", len(net.weights)))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        for w, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def read_mlp(path) -> MLP:
    blob = Path(path).read_bytes()
    if len(blob) < 12:
        raise DataFormatError(f"{path}: truncated header")
    if blob[:8] != MLP_MAGIC:
        raise DataFormatError(f"{path}: bad magic {blob[:8]!r} at offset 0")
    (n_layers,) = struct.unpack_from("<I", blob, 8)
    if n_layers < 1 or n_layers > 64:
        raise DataFormatError(f"{path}: implausible layer count {n_layers}")
    dims_end = 12 + 4 * (n_layers + 1)
    if len(blob) < dims_end:
        raise DataFormatError(f"{path}: truncated dims table")
    dims = struct.unpack_from(f"<{n_layers + 1}I", blob, 12)
    offset = dims_end
    weights, biases = [], []
    for din, dout in zip(dims[:-1], dims[1:]):
        w_bytes = din * dout * 8
        b_bytes = dout * 8
        if len(blob) < offset + w_bytes + b_bytes:
            raise DataFormatError(f"{path}: truncated at offset {offset}")
        weights.append(
            np.frombuffer(blob, dtype="<f8", count=din * dout, offset=offset)
            .reshape(din, dout).copy()
        )
        offset += w_bytes
        biases.append(np.frombuffer(blob, dtype="<f8", count=dout, offset=offset).copy())
        offset += b_bytes
    if offset != len(blob):
        raise DataFormatError(f"{path}: {len(blob) - offset} trailing bytes at offset {offset}")
    return MLP(weights=weights, biases=biases)


def write_run_manifest(path, manifest: dict) -> None:
    """Training-run manifest with the exact documented key set."""
    keys = set(manifest)
    if keys != set(RUN_MANIFEST_KEYS):
        missing = sorted(RUN_MANIFEST_KEYS - keys)
        extra = sorted(keys - RUN_MANIFEST_KEYS)
        raise ValueError(f"run manifest keys: missing {missing}, unexpected {extra}")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_run_manifest(path) -> dict:
    with open(path) as fh:
        manifest = json.load(fh)
    if not isinstance(manifest, dict) or set(manifest) != set(RUN_MANIFEST_KEYS):
        raise DataFormatError(f"{path}: run manifest keys do not match the schema")
    return manifest


def write_function(path, f: PeriodicFunction) -> None:
    with open(path, "w") as fh:
        json.dump(f.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_function(path) -> PeriodicFunction:
    with open(path) as fh:
        d = json.load(fh)
    try:
        return PeriodicFunction.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: invalid periodic function: {exc}") from exc


def write_corpus(out_dir, corpus: LabeledUnitaryCorpus, n_qubits: int) -> Path:
    """Persist matrices as UMAT files plus a JSON manifest; returns its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    counters = {0: 0, 1: 0}
    for (m3, label), prov in zip(corpus.entries, corpus.provenance):
        stem = "learned" if label == 1 else "haar"
        name = f"{stem}_{counters[label]:04d}.umat"
        counters[label] += 1
        write_unitary(out_dir / name, m3, n_qubits)
        records.append({"matrix_path": name, "label": label, "provenance": prov})
    manifest_path = out_dir / "corpus_manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump({"n_qubits": n_qubits, "entries": records}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def read_corpus(manifest_path):
    """Load a persisted corpus; returns (corpus, n_qubits)."""
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if "entries" not in manifest or "n_qubits" not in manifest:
        raise DataFormatError(f"{manifest_path}: missing corpus manifest keys")
    if not manifest["entries"]:
        raise DataFormatError(f"{manifest_path}: empty corpus")
    entries, provenance = [], []
    n_qubits = int(manifest["n_qubits"])
    for rec in manifest["entries"]:
        m3, file_n = read_unitary(manifest_path.parent / rec["matrix_path"])
        if file_n != n_qubits:
            raise DataFormatError(
                f"{rec['matrix_path']}: qubit count {file_n} != corpus {n_qubits}"
            )
        entries.append((m3, int(rec["label"])))
        provenance.append(rec.get("provenance", {}))
    return LabeledUnitaryCorpus(entries=entries, provenance=provenance), n_qubits


def write_csv(target, header, rows) -> None:
    """RFC-4180-style CSV with a header row. target: path or open file."""
    own = not hasattr(target, "write")
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if own:
            fh.close()
