"""Line-delimited JSON persistence for acquisition records.

Layout: one header object on the first line (format tag, version,
register size, ensemble tags, record count, plus optional provenance
fields), then one object per record.  Serialization is canonical
(sorted keys, no whitespace) so identical shadows produce byte-identical
files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ensembles import CliffordFrame, ExplicitFrame, PauliFrame
from .process_shadows import ProcessShadow, ShadowRecord

FORMAT_TAG = "process-shadow-records"
FORMAT_VERSION = 1


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _frame_to_json(frame):
    if isinstance(frame, PauliFrame):
        return {"kind": "pauli", "axes": frame.axes}
    if isinstance(frame, CliffordFrame):
        rows = [sum(int(b) << i for i, b in enumerate(row))
                for row in frame.symplectic]
        return {"kind": "clifford",
                "s": rows,
                "p": [int(b) for b in frame.signs]}
    if isinstance(frame, ExplicitFrame):
        flat = []
        for z in frame.matrix.reshape(-1):
            flat.append([float(z.real), float(z.imag)])
        return {"kind": "explicit", "m": flat}
    raise ValueError(f"cannot serialize frame type {type(frame).__name__}")


def _frame_from_json(obj, n: int):
    kind = obj.get("kind")
    if kind == "pauli":
        return PauliFrame(obj["axes"])
    if kind == "clifford":
        rows = obj["s"]
        if len(rows) != 2 * n:
            raise ValueError("tableau row count does not match header")
        sym = np.array([[(r >> i) & 1 for i in range(2 * n)] for r in rows],
                       dtype=np.uint8)
        return CliffordFrame(sym, np.array(obj["p"], dtype=np.uint8))
    if kind == "explicit":
        d = 2**n
        flat = np.array([complex(re, im) for re, im in obj["m"]])
        return ExplicitFrame(flat.reshape(d, d))
    raise ValueError(f"unknown frame kind {kind!r}")


def save_records(path, ps: ProcessShadow, *, seed=None,
                 channel: str | None = None) -> None:
    """Write a shadow to one JSONL file, with provenance in the header."""
    header = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "n_qubits": ps.n_qubits,
        "count": len(ps),
    }
    if seed is not None:
        header["seed"] = seed
    if channel is not None:
        header["channel"] = channel
    if ps.records:
        header["ensemble_in"] = ps.records[0].ensemble_in
        header["ensemble_out"] = ps.records[0].ensemble_out
    lines = [_dump(header)]
    for r in ps.records:
        lines.append(_dump({
            "b_in": r.b_in,
            "u_in": _frame_to_json(r.u_in),
            "b_out": r.b_out,
            "u_out": _frame_to_json(r.u_out),
        }))
    Path(path).write_text("\n".join(lines) + "\n")


def load_header(path) -> dict:
    """Read and validate only the header line."""
    with open(path) as fh:
        first = fh.readline()
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        raise ValueError(f"line 1: malformed header ({exc.msg})") from exc
    if header.get("format") != FORMAT_TAG:
        raise ValueError("line 1: not a record file (format tag mismatch)")
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(
            f"line 1: unsupported version {header.get('version')!r} "
            f"(expected {FORMAT_VERSION})")
    return header


def load_records(path) -> ProcessShadow:
    """Read a shadow back; errors carry the offending line number."""
    header = load_header(path)
    n = int(header["n_qubits"])
    records = []
    with open(path) as fh:
        fh.readline()  # header already validated
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(ShadowRecord(
                    b_in=obj["b_in"],
                    u_in=_frame_from_json(obj["u_in"], n),
                    u_out=_frame_from_json(obj["u_out"], n),
                    b_out=obj["b_out"],
                ))
            except (json.JSONDecodeError, KeyError, TypeError,
                    ValueError) as exc:
                raise ValueError(f"line {lineno}: bad record ({exc})") from exc
    if len(records) != int(header["count"]):
        raise ValueError(
            f"line {len(records) + 1}: expected {header['count']} records, "
            f"found {len(records)}")
    return ProcessShadow(records, n)
