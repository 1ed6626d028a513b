"""Message-file parsing and versioned JSON reports."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import MessageFileError, QPIRError
from .protocols.messages import COMMUTE_TOL, KINDS, PURE, UNITARIES, MessageSet

MESSAGES_SCHEMA = "qpir-messages/1"
REPORT_SCHEMA = "qpir-report/1"


def _complex(x, path: str) -> complex:
    if (not isinstance(x, list) or len(x) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)):
        raise MessageFileError(path, "expected a complex number written as [re, im]")
    if not all(math.isfinite(v) for v in x):
        raise MessageFileError(path, "complex entries must be finite")
    return complex(x[0], x[1])


def _vector(x, path: str, d: int) -> np.ndarray:
    if not isinstance(x, list) or len(x) != d:
        raise MessageFileError(path, f"expected a list of {d} complex entries")
    return np.array([_complex(v, f"{path}[{i}]") for i, v in enumerate(x)], dtype=complex)


def _matrix(x, path: str, d: int) -> np.ndarray:
    if not isinstance(x, list) or len(x) != d:
        raise MessageFileError(path, f"expected {d} rows")
    return np.array([_vector(r, f"{path}[{i}]", d) for i, r in enumerate(x)])


def parse_messages(doc, require_commuting: bool = False) -> MessageSet:
    """Validate a decoded message document; every error names its JSON path."""
    if not isinstance(doc, dict):
        raise MessageFileError("$", "top level must be an object")
    schema = doc.get("schema", MESSAGES_SCHEMA)
    if schema != MESSAGES_SCHEMA:
        raise MessageFileError("$.schema", f"unsupported schema {schema!r}; expected {MESSAGES_SCHEMA!r}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise MessageFileError("$.kind", f"must be one of {list(KINDS)}")
    entries = doc.get("messages")
    if not isinstance(entries, list) or not entries:
        raise MessageFileError("$.messages", "must be a non-empty list")
    F = len(entries)
    if "dims" in doc:
        dims = doc["dims"]
        if not isinstance(dims, list) or len(dims) != F:
            raise MessageFileError("$.dims", f"must list one dimension per message ({F})")
        where = [f"$.dims[{i}]" for i in range(F)]
    elif "d" in doc:
        dims = [doc["d"]] * F
        where = ["$.d"] * F
    else:
        raise MessageFileError("$", "either 'd' or 'dims' is required")
    for w, d in zip(where, dims):
        if not isinstance(d, int) or isinstance(d, bool) or d < 2:
            raise MessageFileError(w, "dimension must be an integer >= 2")

    payload = []
    for i, (e, d) in enumerate(zip(entries, dims)):
        path = f"$.messages[{i}]"
        a = _vector(e, path, d) if kind == PURE else _matrix(e, path, d)
        try:
            MessageSet(kind, (a,))
        except QPIRError as exc:
            reason = str(exc).split(": ", 1)[-1]
            raise MessageFileError(path, reason) from None
        payload.append(a)
    ms = MessageSet(kind, tuple(payload))
    flagged = doc.get("commutative", False)
    if not isinstance(flagged, bool):
        raise MessageFileError("$.commutative", "must be true or false")
    if kind == UNITARIES and (flagged or require_commuting):
        pair = ms.noncommuting_pair()
        if pair is not None:
            raise MessageFileError(f"$.messages[{pair[1] - 1}]",
                                   f"does not commute with message {pair[0]} (tolerance {COMMUTE_TOL})")
    return ms


def load_messages(path, require_commuting: bool = False) -> MessageSet:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MessageFileError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return parse_messages(doc, require_commuting)


def _encode_complex(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def messages_document(ms: MessageSet, commutative: bool | None = None) -> dict:
    doc: dict = {"schema": MESSAGES_SCHEMA, "kind": ms.kind}
    if len(set(ms.dims)) == 1:
        doc["d"] = ms.dims[0]
    else:
        doc["dims"] = list(ms.dims)
    if commutative is not None:
        doc["commutative"] = commutative
    if ms.kind == PURE:
        doc["messages"] = [[_encode_complex(z) for z in m] for m in ms.payload]
    else:
        doc["messages"] = [[[_encode_complex(z) for z in row] for row in m] for m in ms.payload]
    return doc


def save_messages(ms: MessageSet, path, commutative: bool | None = None) -> None:
    Path(path).write_text(json.dumps(messages_document(ms, commutative), indent=1))


def _check_finite(obj, path="$"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise QPIRError(f"report field {path} is not finite")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return _encode_complex(obj)
    return obj


def write_report(report: dict, path) -> dict:
    doc = _plain({"schema": REPORT_SCHEMA, **report})
    _check_finite(doc)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))
    return doc


def read_report(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != REPORT_SCHEMA:
        raise QPIRError(f"unsupported report schema {doc.get('schema')!r}")
    return doc
