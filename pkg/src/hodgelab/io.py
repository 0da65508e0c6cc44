"""File formats: tensor and 1-form JSON, report JSON/CSV, binary matrix dumps.

Tensor JSON::

    {"truncation": N,
     "entries": [{"k": [k1, k2, k3], "ij": [i, j], "re": r, "im": s}, ...],
     "scale": eps}

Indices ``i <= j`` are 1-based.  Only one of ``k`` and ``-k`` may be listed;
the conjugate coefficient is synthesized.  For a metric file the metric is
``delta + scale * field``; for a direction file the direction is
``scale * field``.  The 1-form format is the same with ``"component": i``
(1-based) in place of ``"ij"``.

Matrix dumps are two little-endian ``uint64`` dimensions followed by the
entries as little-endian ``float64`` in row-major order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import struct
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import InputError
from .fields import SYM_INDEX, SYM_PAIRS, FourierOneForm, FourierSymTensor, MetricField


def _load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not text.strip():
        raise InputError(f"{path} is empty")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected a JSON object")
    return obj


def _number(v, what) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InputError(f"{what} must be a finite number, got {v!r}")
    return float(v)


def _parse(obj: dict, ncomp: int, index_key: str):
    for key in ("truncation", "entries"):
        if key not in obj:
            raise InputError(f"missing key {key!r}")
    N = obj["truncation"]
    if isinstance(N, bool) or not isinstance(N, int) or N < 0:
        raise InputError(f"truncation must be a nonnegative integer, got {N!r}")
    scale = _number(obj.get("scale", 1.0), "scale")
    if not isinstance(obj["entries"], list):
        raise InputError("entries must be a list")
    n = 2 * N + 1
    c = np.zeros((ncomp, n, n, n), dtype=complex)
    seen = set()
    for e in obj["entries"]:
        if not isinstance(e, dict) or "k" not in e or index_key not in e:
            raise InputError(f"malformed entry {e!r}")
        k = e["k"]
        if not (isinstance(k, list) and len(k) == 3 and all(isinstance(v, int) and not isinstance(v, bool) for v in k)):
            raise InputError(f"wave vector must be three integers, got {k!r}")
        if max(abs(v) for v in k) > N:
            raise InputError(f"wave vector {k} outside truncation {N}")
        if ncomp == 6:
            ij = e["ij"]
            if not (isinstance(ij, list) and len(ij) == 2 and all(isinstance(v, int) for v in ij)):
                raise InputError(f"ij must be two integers, got {ij!r}")
            i, j = ij
            if not (1 <= i <= j <= 3):
                raise InputError(f"ij must satisfy 1 <= i <= j <= 3, got {ij}")
            comp = int(SYM_INDEX[i - 1, j - 1])
        else:
            comp = e["component"]
            if not isinstance(comp, int) or not 1 <= comp <= 3:
                raise InputError(f"component must be 1, 2 or 3, got {comp!r}")
            comp -= 1
        re = _number(e.get("re", 0.0), "re")
        im = _number(e.get("im", 0.0), "im")
        kt, mk = tuple(k), tuple(-v for v in k)
        if (comp, kt) in seen:
            raise InputError(f"duplicate entry for k={k}, {index_key}={e[index_key]}")
        if kt != mk and (comp, mk) in seen:
            raise InputError(f"k={k} listed together with its conjugate {list(mk)}")
        seen.add((comp, kt))
        a = re + 1j * im
        idx = tuple(v + N for v in k)
        if kt == (0, 0, 0):
            if im != 0.0:
                raise InputError("zero-mode coefficient must be real")
            c[(comp,) + idx] += a
        else:
            c[(comp,) + idx] += a
            c[(comp,) + tuple(2 * N - v for v in idx)] += np.conj(a)
    return c, scale


def tensor_from_json(obj: dict) -> FourierSymTensor:
    c, scale = _parse(obj, 6, "ij")
    return FourierSymTensor(scale * c, check=False)


def one_form_from_json(obj: dict) -> FourierOneForm:
    c, scale = _parse(obj, 3, "component")
    return FourierOneForm(scale * c, check=False)


def _entries(data: np.ndarray, labels) -> list:
    N = (data.shape[1] - 1) // 2
    out = []
    r = range(-N, N + 1)
    for k in ((a, b, c) for a in r for b in r for c in r):
        first = next((v for v in k if v != 0), 0)
        if first < 0:
            continue
        idx = tuple(v + N for v in k)
        for comp, label in enumerate(labels):
            a = data[(comp,) + idx]
            if a != 0:
                out.append({"k": list(k), **label, "re": float(a.real),
                            "im": 0.0 if first == 0 else float(a.imag)})
    return out


def tensor_to_json(h: FourierSymTensor, scale: float = 1.0) -> dict:
    labels = [{"ij": [i + 1, j + 1]} for i, j in SYM_PAIRS]
    return {"truncation": h.truncation, "entries": _entries(h.data, labels), "scale": scale}


def one_form_to_json(u: FourierOneForm, scale: float = 1.0) -> dict:
    labels = [{"component": i + 1} for i in range(3)]
    return {"truncation": u.truncation, "entries": _entries(u.data, labels), "scale": scale}


def load_metric(path, margin: float = 0.1) -> MetricField:
    """Metric ``delta + scale * field`` from a tensor JSON file."""
    return MetricField(tensor_from_json(_load(path)), margin)


def load_direction(path) -> FourierSymTensor:
    return tensor_from_json(_load(path))


def load_one_form(path) -> FourierOneForm:
    return one_form_from_json(_load(path))


def save_metric(metric: MetricField, path) -> None:
    write_json(tensor_to_json(metric.deviation), path)


# ---------------------------------------------------------------------------
# reports


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(type(v))


def to_json_text(obj, indent: int = 2) -> str:
    """Deterministic JSON with sorted keys and 17 significant digits."""
    def walk(o, depth):
        pad, inner = " " * (indent * depth), " " * (indent * (depth + 1))
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{inner}{json.dumps(str(k))}: {walk(o[k], depth + 1)}" for k in sorted(o)]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            seq = list(o)
            if not seq:
                return "[]"
            if all(not isinstance(x, (dict, list, tuple, np.ndarray)) for x in seq):
                return "[" + ", ".join(_fmt(x) for x in seq) + "]"
            return "[\n" + ",\n".join(inner + walk(x, depth + 1) for x in seq) + "\n" + pad + "]"
        return _fmt(o)
    return walk(obj, 0) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(to_json_text(obj))


def stamped(report: dict) -> dict:
    """Wrap a report with an isolated ``timestamp`` key."""
    return {"timestamp": datetime.now(timezone.utc).isoformat(), "report": report}


def spectrum_csv(result) -> str:
    d = result.to_dict()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value", "cluster_id", "cluster_size", "residual"])
    for i, (v, c, m, r) in enumerate(zip(d["eigenvalues"], d["cluster_ids"],
                                         d["multiplicities"], d["residuals"])):
        w.writerow([i, f"{v:.17g}", c, m, f"{r:.17g}"])
    return buf.getvalue()


def write_matrix(path, A: np.ndarray) -> None:
    A = np.ascontiguousarray(A, dtype="<f8")
    if A.ndim != 2:
        raise InputError("matrix dump needs a 2-D array")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", *A.shape))
        fh.write(A.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise InputError(f"{path}: truncated header")
    r, c = struct.unpack("<QQ", raw[:16])
    if len(raw) != 16 + 8 * r * c:
        raise InputError(f"{path}: size does not match header {r}x{c}")
    return np.frombuffer(raw[16:], dtype="<f8").reshape(r, c).copy()
