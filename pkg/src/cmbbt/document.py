"""JSON problem documents (schema ``cmbbt/1``).

A problem document looks like::

    {
      "schema": "cmbbt/1",
      "d": 2, "p": -1, "q": 1, "N": 10,
      "coefficients": {"-1": [[[re, im], ...], ...], "0": ..., "1": ...},
      "corner": [{"row": 1, "col": 10, "block": [[[re, im], ...], ...]}],
      "mode": "finite",
      "hermitian": true
    }

Every complex number is a ``[re, im]`` pair (a bare real number is also
accepted on input, and for ``d = 1`` a block may be a single number). ``mode`` is ``"finite"`` (default) or ``"semi_infinite"``;
the latter ignores ``N``. Unknown keys are rejected, and every error names
the JSON path where it occurred.
"""

import json
from typing import Any, Optional, Union

import numpy as np

from .exceptions import ProblemFormatError
from .laurent import LaurentSymbol
from .problem import ProblemSpec
from .semiinfinite import SemiInfiniteSpec

SCHEMA = "cmbbt/1"

_TOP_KEYS = {"schema", "d", "p", "q", "N", "coefficients", "corner", "mode", "hermitian"}
_CORNER_KEYS = {"row", "col", "block"}


def _int(value, path) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProblemFormatError(f"expected an integer, got {value!r}", path)
    return value


def _complex(value, path) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)):
        z = complex(value[0], value[1])
        if not np.isfinite(z):
            raise ProblemFormatError("non-finite number", path)
        return z
    raise ProblemFormatError(f"expected a number or an [re, im] pair, got {value!r}", path)


def _block(value, d, path) -> np.ndarray:
    if d == 1 and not (isinstance(value, list) and value and isinstance(value[0], list)):
        # a 1x1 block may be written as a bare number or an [re, im] pair
        return np.array([[_complex(value, path)]])
    if not isinstance(value, list) or len(value) != d:
        raise ProblemFormatError(f"expected a {d}x{d} array", path)
    out = np.zeros((d, d), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != d:
            raise ProblemFormatError(f"expected a row of length {d}", f"{path}[{i}]")
        for j, x in enumerate(row):
            out[i, j] = _complex(x, f"{path}[{i}][{j}]")
    return out


def parse_problem(doc: Union[str, bytes, dict]) -> Union[ProblemSpec, SemiInfiniteSpec]:
    """Problem spec from a document (JSON text or an already-decoded dict).

    Raises
    ------
    ProblemFormatError
        Syntax errors carry line and column; structural errors carry a
        ``$.path``.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"invalid JSON: {exc.msg} at line {exc.lineno}, "
                                     f"column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise ProblemFormatError("document must be a JSON object", "$")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ProblemFormatError(f"unknown key {unknown[0]!r}", f"$.{unknown[0]}")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ProblemFormatError(f"unsupported schema {schema!r} (expected {SCHEMA!r})", "$.schema")
    mode = doc.get("mode", "finite")
    if mode not in ("finite", "semi_infinite"):
        raise ProblemFormatError(f"mode must be 'finite' or 'semi_infinite', got {mode!r}", "$.mode")
    for key in ("d", "p", "q", "coefficients") + (("N",) if mode == "finite" else ()):
        if key not in doc:
            raise ProblemFormatError(f"missing key {key!r}", "$")
    d = _int(doc["d"], "$.d")
    p, q = _int(doc["p"], "$.p"), _int(doc["q"], "$.q")
    if d < 1:
        raise ProblemFormatError("d must be positive", "$.d")
    if p > q:
        raise ProblemFormatError(f"p={p} exceeds q={q}", "$.p")
    if "hermitian" in doc and not isinstance(doc["hermitian"], bool):
        raise ProblemFormatError("hermitian must be true or false", "$.hermitian")
    coeffs_doc = doc["coefficients"]
    if not isinstance(coeffs_doc, dict):
        raise ProblemFormatError("coefficients must be an object keyed by power", "$.coefficients")
    coeffs = {}
    for key, block in coeffs_doc.items():
        path = f"$.coefficients[{json.dumps(key)}]"
        try:
            r = int(key)
        except ValueError:
            raise ProblemFormatError(f"power {key!r} is not an integer", path) from None
        if str(r) != key.strip():
            raise ProblemFormatError(f"power {key!r} is not a canonical integer", path)
        if not p <= r <= q:
            raise ProblemFormatError(f"power {r} outside the bandwidth [{p}, {q}]", path)
        coeffs[r] = _block(block, d, path)
    symbol = LaurentSymbol(coeffs, d=d)
    if symbol.is_zero:
        raise ProblemFormatError("all coefficients vanish", "$.coefficients")
    corner = {}
    corner_doc = doc.get("corner", [])
    if not isinstance(corner_doc, list):
        raise ProblemFormatError("corner must be an array", "$.corner")
    for k, entry in enumerate(corner_doc):
        path = f"$.corner[{k}]"
        if not isinstance(entry, dict):
            raise ProblemFormatError("corner entry must be an object", path)
        bad = sorted(set(entry) - _CORNER_KEYS)
        if bad:
            raise ProblemFormatError(f"unknown key {bad[0]!r}", f"{path}.{bad[0]}")
        for key in sorted(_CORNER_KEYS):
            if key not in entry:
                raise ProblemFormatError(f"missing key {key!r}", path)
        b, j = _int(entry["row"], f"{path}.row"), _int(entry["col"], f"{path}.col")
        block = _block(entry["block"], d, f"{path}.block")
        corner[(b, j)] = corner.get((b, j), 0) + block
    try:
        if mode == "semi_infinite":
            return SemiInfiniteSpec(symbol, corner, bandwidth=(p, q))
        N = _int(doc["N"], "$.N")
        if N < 1:
            raise ProblemFormatError("N must be positive", "$.N")
        spec = ProblemSpec(symbol, N, corner, bandwidth=(p, q), allow_empty_bulk=True)
    except ProblemFormatError:
        raise
    except ValueError as exc:
        raise ProblemFormatError(str(exc), "$.corner") from None
    spec.hermitian_hint = doc.get("hermitian")
    return spec


def complex_pair(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def array_pairs(a) -> Any:
    """Nested lists of ``[re, im]`` pairs for any complex array."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return complex_pair(a)
    return [array_pairs(x) for x in a]


def problem_document(spec: Union[ProblemSpec, SemiInfiniteSpec], hermitian: Optional[bool] = None
                     ) -> dict:
    """Document describing ``spec`` (inverse of :func:`parse_problem`)."""
    semi = isinstance(spec, SemiInfiniteSpec)
    doc = {
        "schema": SCHEMA,
        "d": spec.d,
        "p": spec.p,
        "q": spec.q,
        "coefficients": {str(r): array_pairs(a) for r, a in spec.symbol.items()},
        "corner": [{"row": b, "col": j, "block": array_pairs(block)}
                   for (b, j), block in sorted(spec.corner.items())],
        "mode": "semi_infinite" if semi else "finite",
    }
    if not semi:
        doc["N"] = spec.N
    hint = hermitian if hermitian is not None else getattr(spec, "hermitian_hint", None)
    if hint is not None:
        doc["hermitian"] = bool(hint)
    return doc


def dumps(doc: dict, indent: Optional[int] = 2) -> str:
    """Canonical serialization: sorted keys, shortest round-trip float repr."""
    return json.dumps(doc, sort_keys=True, indent=indent, allow_nan=False)
