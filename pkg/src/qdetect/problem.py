"""JSON problem files and matrix (de)serialization.

Complex numbers are ``[re, im]`` pairs, so a vector is a list of pairs and a
matrix is a list of rows of pairs. A problem file holds either an explicit
ensemble::

    {"schema_version": "1", "dim": 2,
     "states": [<matrix>, ...], "priors": [0.5, 0.5]}

or a symmetric construction from a group and generator factors::

    {"schema_version": "1", "dim": 2,
     "group": [<matrix>, ...], "generators": [<vector or matrix>, ...],
     "second_group": [<matrix>, ...]}        # optional

With ``second_group`` (the ``V_k``) a single generator ``phi`` is expanded to
``[V_k phi]``; several generators are checked against that form.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensemble import Ensemble, Povm, build_ensemble
from .errors import DimensionMismatch, InputError, PriorsInvalid
from .symmetry import CguSpec, GuSpec, UnitaryGroup, build_group, expand_factors, generate_cgu

SCHEMA_VERSION = "1"


class ProblemFileError(InputError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


def encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(a) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    return [[encode_complex(v) for v in row] for row in a]


def encode_vector(v) -> list:
    return [encode_complex(z) for z in np.asarray(v, dtype=complex).reshape(-1)]


def _is_number(x) -> bool:
    return isinstance(x, numbers.Real) and not isinstance(x, bool)


def _decode_complex(x, field: str) -> complex:
    if not (isinstance(x, list) and len(x) == 2 and all(_is_number(v) for v in x)):
        raise ProblemFileError(field, f"expected a [re, im] pair, got {json.dumps(x)[:40]}")
    return complex(x[0], x[1])


def decode_vector(data, field: str) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise ProblemFileError(field, "expected a non-empty list of [re, im] pairs")
    return np.array([_decode_complex(x, f"{field}[{i}]") for i, x in enumerate(data)])


def decode_matrix(data, field: str) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise ProblemFileError(field, "expected a non-empty list of rows")
    rows = [decode_vector(row, f"{field}[{i}]") for i, row in enumerate(data)]
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ProblemFileError(f"{field}[{i}]", f"row has {len(row)} entries, expected {width}")
    return np.array(rows)


def decode_factor(data, field: str) -> np.ndarray:
    """A vector (list of pairs) becomes a column; a matrix is kept as is."""
    if isinstance(data, list) and data and isinstance(data[0], list) and data[0] and _is_number(data[0][0]):
        return decode_vector(data, field)[:, None]
    return decode_matrix(data, field)


def _matrix_list(doc, key, dim, square=True) -> list:
    items = doc[key]
    if not isinstance(items, list) or not items:
        raise ProblemFileError(key, "expected a non-empty list")
    out = []
    for i, item in enumerate(items):
        field = f"{key}[{i}]"
        m = decode_matrix(item, field) if square else decode_factor(item, field)
        if m.shape[0] != dim or (square and m.shape[1] != dim):
            raise ProblemFileError(field, f"shape {m.shape} does not match dim {dim}")
        out.append(m)
    return out


def _wrap(field, fn, *args):
    try:
        return fn(*args)
    except ProblemFileError:
        raise
    except InputError as exc:
        raise ProblemFileError(field, str(exc)) from exc


@dataclass(frozen=True, eq=False)
class Problem:
    dim: int
    ensemble: Ensemble
    group: UnitaryGroup | None = None
    generators: tuple = ()
    second_group: UnitaryGroup | None = None

    @property
    def symmetric(self) -> bool:
        return self.group is not None

    @property
    def cgu_spec(self) -> CguSpec | None:
        return CguSpec(self.group, self.generators) if self.group is not None else None

    @property
    def gu_spec(self) -> GuSpec | None:
        if self.group is None or len(self.generators) != 1:
            return None
        return GuSpec(self.group, self.generators[0])


def parse_problem(doc) -> Problem:
    """Validate a decoded JSON document and build the ensemble it describes."""
    if not isinstance(doc, dict):
        raise ProblemFileError("", "problem file must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ProblemFileError("schema_version", f"unsupported schema version {version!r}, expected {SCHEMA_VERSION!r}")
    dim = doc.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ProblemFileError("dim", "expected a positive integer")

    explicit = "states" in doc or "priors" in doc
    symmetric = "group" in doc or "generators" in doc
    if explicit == symmetric:
        raise ProblemFileError("", "give exactly one of {states, priors} or {group, generators}")

    if explicit:
        for key in ("states", "priors"):
            if key not in doc:
                raise ProblemFileError(key, "missing")
        if "second_group" in doc:
            raise ProblemFileError("second_group", "only valid together with group and generators")
        states = _matrix_list(doc, "states", dim)
        priors = doc["priors"]
        if not isinstance(priors, list) or not all(_is_number(p) for p in priors):
            raise ProblemFileError("priors", "expected a list of numbers")
        try:
            ens = build_ensemble(states, priors)
        except (PriorsInvalid, DimensionMismatch) as exc:
            raise ProblemFileError("priors", str(exc)) from exc
        except InputError as exc:
            raise ProblemFileError("states", str(exc)) from exc
        return Problem(dim, ens)

    for key in ("group", "generators"):
        if key not in doc:
            raise ProblemFileError(key, "missing")
    group = _wrap("group", build_group, _matrix_list(doc, "group", dim))
    gens = _matrix_list(doc, "generators", dim, square=False)
    second = None
    if "second_group" in doc:
        second = _wrap("second_group", build_group, _matrix_list(doc, "second_group", dim))
        if len(gens) == 1:
            gens = expand_factors(second, gens)
        elif len(gens) != second.order:
            raise ProblemFileError("generators", f"expected 1 or {second.order} generators for the second group")
        else:
            for k, (v, phi) in enumerate(zip(second.elements, gens)):
                if phi.shape != gens[0].shape or np.linalg.norm(v @ gens[0] - phi) > 1e-8:
                    raise ProblemFileError(f"generators[{k}]", "is not second_group[k] applied to generators[0]")
    ens = _wrap("generators", generate_cgu, CguSpec(group, tuple(gens)))
    return Problem(dim, ens, group, tuple(gens), second)


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFileError("", f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError("", f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_problem(path) -> Problem:
    return parse_problem(load_json(path))


def _section(doc, key):
    """Accept either a bare section or a report that nests it under ``key``."""
    if isinstance(doc, dict) and key in doc and isinstance(doc[key], dict):
        return doc[key]
    return doc


def load_povm(path, dim: int) -> Povm:
    doc = _section(load_json(path), "povm")
    if not isinstance(doc, dict) or "operators" not in doc:
        raise ProblemFileError("operators", "missing")
    ops = _matrix_list(doc, "operators", dim)
    return _wrap("operators", Povm, ops, 1e-9, False)


def load_certificate(path, dim: int) -> np.ndarray:
    doc = _section(load_json(path), "certificate")
    if not isinstance(doc, dict) or "x" not in doc:
        raise ProblemFileError("x", "missing")
    x = decode_matrix(doc["x"], "x")
    if x.shape != (dim, dim):
        raise DimensionMismatch(f"x: shape {x.shape} does not match dim {dim}")
    return x


def problem_document(states=None, priors=None, group=None, generators=None, second_group=None) -> dict:
    """Build a problem-file document from arrays (inverse of :func:`parse_problem`)."""
    doc = {"schema_version": SCHEMA_VERSION}
    if states is not None:
        doc["dim"] = int(np.asarray(states[0]).shape[0])
        doc["states"] = [encode_matrix(s) for s in states]
        doc["priors"] = [float(p) for p in priors]
    else:
        doc["dim"] = int(np.asarray(group[0]).shape[0])
        doc["group"] = [encode_matrix(u) for u in group]
        doc["generators"] = [
            encode_vector(g) if np.asarray(g).ndim == 1 else encode_matrix(g) for g in generators
        ]
        if second_group is not None:
            doc["second_group"] = [encode_matrix(v) for v in second_group]
    return doc
