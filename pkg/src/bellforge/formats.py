"""JSON formats for states, correlation tensors and inequalities."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .construct import InequalityCoefficients
from .quantum import CorrelationTensor, QuantumState, state_from_amplitudes, state_from_matrix

TENSOR_TOL = 1e-12


class FormatError(ValueError):
    """Malformed input document."""


def _complex(pair) -> complex:
    if isinstance(pair, (int, float)):
        return complex(pair)
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise FormatError(f"expected [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


# --- states ------------------------------------------------------------------


def state_from_json(doc: dict) -> QuantumState:
    try:
        n = int(doc["n_parties"])
        kind = doc["kind"]
        if kind == "pure":
            amps = np.array([_complex(a) for a in doc["amplitudes"]])
            return state_from_amplitudes(n, amps)
        if kind == "density":
            rho = np.array([[_complex(x) for x in row] for row in doc["matrix"]])
            state = state_from_matrix(rho)
            if state.n_parties != n:
                raise FormatError(f"matrix is for {state.n_parties} qubits, n_parties says {n}")
            return state
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed state document: {exc}") from None
    raise FormatError(f"unknown state kind {kind!r}; use 'pure' or 'density'")


def state_to_json(state: QuantumState) -> dict:
    return {
        "n_parties": state.n_parties,
        "kind": "density",
        "matrix": [[_pair(x) for x in row] for row in state.rho],
    }


def amplitudes_to_json(n: int, amps) -> dict:
    return {"n_parties": n, "kind": "pure", "amplitudes": [_pair(complex(a)) for a in amps]}


# --- tensors -----------------------------------------------------------------


def tensor_to_json(tensor: CorrelationTensor, tol: float = TENSOR_TOL) -> list[dict]:
    return [{"indices": list(idx), "value": float(v)} for idx, v in tensor.nonzero(tol)]


def tensor_from_json(entries: list[dict], n_parties: int) -> CorrelationTensor:
    comps = np.zeros((4,) * n_parties)
    for e in entries:
        idx = tuple(int(i) for i in e["indices"])
        if len(idx) != n_parties or not all(0 <= i <= 3 for i in idx):
            raise FormatError(f"bad tensor index {idx}")
        comps[idx] = float(e["value"])
    return CorrelationTensor(n_parties, comps)


# --- inequalities ------------------------------------------------------------


def _coeff_str(c: Fraction) -> str:
    """Integers and dyadic rationals as exact decimals, anything else as p/q."""
    if c.denominator == 1:
        return str(c.numerator)
    d = c.denominator
    if d & (d - 1) == 0:
        digits = d.bit_length() - 1
        scaled = c * 10**digits
        text = f"{abs(scaled.numerator) // 10**digits}.{abs(scaled.numerator) % 10**digits:0{digits}d}"
        return ("-" if c < 0 else "") + text.rstrip("0")
    return f"{c.numerator}/{c.denominator}"


def _parse_coeff(value) -> Fraction:
    if isinstance(value, bool):
        raise FormatError(f"bad coefficient {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            pass
    raise FormatError(f"bad coefficient {value!r}")


def inequality_to_json(ineq: InequalityCoefficients) -> dict:
    return {
        "n_parties": ineq.n_parties,
        "settings_per_party": list(ineq.settings_per_party),
        "declared_bound": _coeff_str(ineq.declared_bound),
        "terms": [
            {"settings": list(k), "coeff": _coeff_str(c)} for k, c in ineq.terms.items()
        ],
    }


def inequality_from_json(doc: dict) -> InequalityCoefficients:
    try:
        terms = {}
        for t in doc["terms"]:
            key = tuple(int(i) for i in t["settings"])
            if key in terms:
                raise FormatError(f"duplicate term {key}")
            terms[key] = _parse_coeff(t["coeff"])
        return InequalityCoefficients(
            int(doc["n_parties"]),
            tuple(int(m) for m in doc["settings_per_party"]),
            terms,
            _parse_coeff(doc["declared_bound"]),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed inequality document: {exc}") from None


# --- files -------------------------------------------------------------------


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def read_json(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None


def write_json(path, doc) -> None:
    Path(path).write_text(dumps(doc))
