import json
from fractions import Fraction

import numpy as np
import pytest

from bellforge import catalog, formats
from bellforge.construct import InequalityCoefficients, family_442, family_signs, generating_inequality
from bellforge.quantum import correlation_tensor


def test_inequality_round_trip_bit_exact(tmp_path):
    for ineq in (generating_inequality(3), generating_inequality(4), family_442(family_signs(321))):
        path = tmp_path / "q.json"
        formats.write_json(path, formats.inequality_to_json(ineq))
        text = path.read_text()
        back = formats.inequality_from_json(formats.read_json(path))
        assert back == ineq
        formats.write_json(path, formats.inequality_to_json(back))
        assert path.read_text() == text


def test_dyadic_coefficients_as_decimals():
    q = InequalityCoefficients(2, (2, 2), {(1, 1): Fraction(-3, 8), (2, 2): Fraction(1, 3)}, Fraction(5, 2))
    doc = formats.inequality_to_json(q)
    assert doc["declared_bound"] == "2.5"
    assert [t["coeff"] for t in doc["terms"]] == ["-0.375", "1/3"]
    assert formats.inequality_from_json(json.loads(json.dumps(doc))) == q


def test_inequality_numeric_coefficients_accepted():
    doc = {"n_parties": 1, "settings_per_party": [2], "declared_bound": 1, "terms": [{"settings": [1], "coeff": 0.5}]}
    assert formats.inequality_from_json(doc).terms == {(1,): Fraction(1, 2)}


@pytest.mark.parametrize(
    "doc",
    [
        {"n_parties": 1},
        {"n_parties": 1, "settings_per_party": [2], "declared_bound": 1, "terms": [{"settings": [1], "coeff": "x"}]},
        {"n_parties": 1, "settings_per_party": [2], "declared_bound": 1,
         "terms": [{"settings": [1], "coeff": 1}, {"settings": [1], "coeff": 1}]},
        {"n_parties": 1, "settings_per_party": [2], "declared_bound": 1, "terms": [{"settings": [3], "coeff": 1}]},
    ],
)
def test_malformed_inequalities(doc):
    with pytest.raises(ValueError):
        formats.inequality_from_json(doc)


def test_state_documents():
    pure = {"n_parties": 2, "kind": "pure", "amplitudes": [[0, 0], [1, 0], [1, 0], [0, 0]]}
    s = formats.state_from_json(pure)
    assert np.allclose(correlation_tensor(s).full, np.diag([1, 1, -1]))
    dens = formats.state_from_json(formats.state_to_json(s))
    assert np.allclose(dens.rho, s.rho)
    amps = formats.amplitudes_to_json(1, [1, 1j])
    assert amps["amplitudes"] == [[1.0, 0.0], [0.0, 1.0]]
    for bad in (
        {"n_parties": 2, "kind": "mixed"},
        {"n_parties": 2, "kind": "pure"},
        {"n_parties": 2, "kind": "pure", "amplitudes": [[1, 0, 0]]},
        {"n_parties": 1, "kind": "density", "matrix": [[[1, 0], [0, 0], [0, 0], [0, 0]]] * 4},
    ):
        with pytest.raises(ValueError):
            formats.state_from_json(bad)


def test_tensor_document_round_trip():
    t = catalog.psi4().analytic_tensor
    doc = formats.tensor_to_json(t)
    assert all(abs(e["value"]) > 1e-12 for e in doc)
    back = formats.tensor_from_json(doc, 4)
    assert np.array_equal(back.components[(slice(1, 4),) * 4], t.full)


def test_bad_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(formats.FormatError):
        formats.read_json(p)
