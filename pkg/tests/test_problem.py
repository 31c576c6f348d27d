import json

import numpy as np
import pytest

from qdetect import linalg
from qdetect.errors import DimensionMismatch
from qdetect.problem import (
    ProblemFileError,
    decode_factor,
    decode_matrix,
    encode_matrix,
    load_certificate,
    load_povm,
    load_problem,
    parse_problem,
    problem_document,
)

SEED = 6606


def qubit_doc(**overrides):
    doc = problem_document(states=[np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], priors=[0.5, 0.5])
    doc.update(overrides)
    return doc


def test_matrix_round_trip_exact():
    rng = np.random.default_rng(SEED)
    for _ in range(50):
        n = int(rng.integers(1, 6))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a *= 10.0 ** rng.integers(-8, 8)
        back = decode_matrix(json.loads(json.dumps(encode_matrix(a))), "m")
        assert np.max(np.abs(back - a)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


def test_vector_factor_becomes_column():
    f = decode_factor([[1.0, 0.0], [0.0, 1.0]], "g")
    assert f.shape == (2, 1)
    np.testing.assert_array_equal(f[:, 0], [1, 1j])


def test_parse_explicit():
    prob = parse_problem(qubit_doc())
    assert prob.dim == 2 and not prob.symmetric
    assert len(prob.ensemble) == 2


def test_parse_symmetric_with_second_group():
    z = np.array([[0, 1], [1, 0]])
    b = np.diag([1, -1])
    doc = problem_document(group=[np.eye(2), z], generators=[np.array([2, 1]) / np.sqrt(5)], second_group=[np.eye(2), b])
    prob = parse_problem(doc)
    assert len(prob.generators) == 2
    assert prob.gu_spec is None and prob.cgu_spec.r == 2
    np.testing.assert_allclose(prob.generators[1][:, 0], np.array([2, -1]) / np.sqrt(5))


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.update(priors=[0.5, 0.6]), "priors"),
        (lambda d: d.update(priors=[0.5]), "priors"),
        (lambda d: d.update(priors="half"), "priors"),
        (lambda d: d.update(schema_version="2"), "schema_version"),
        (lambda d: d.update(dim=0), "dim"),
        (lambda d: d.update(dim=3), "states[0]"),
        (lambda d: d["states"][1].__setitem__(0, [[1, 0], 7]), "states[1][0][1]"),
        (lambda d: d.update(group=[]), ""),
        (lambda d: d.pop("priors"), "priors"),
    ],
)
def test_field_anchored_errors(mutate, field):
    doc = qubit_doc()
    mutate(doc)
    with pytest.raises(ProblemFileError) as info:
        parse_problem(doc)
    assert info.value.field == field


def test_priors_message():
    with pytest.raises(ProblemFileError, match="priors must sum to 1"):
        parse_problem(qubit_doc(priors=[0.7, 0.7]))


def test_group_errors_are_anchored():
    doc = problem_document(group=[np.eye(2), np.diag([1, 1j])], generators=[np.array([1, 0])])
    with pytest.raises(ProblemFileError) as info:
        parse_problem(doc)
    assert info.value.field == "group"
    doc = problem_document(
        group=[np.eye(2), np.array([[0, 1], [1, 0]])],
        generators=[np.array([1, 0]), np.array([0, 1]), np.array([1, 1]) / np.sqrt(2)],
        second_group=[np.eye(2), np.diag([1, -1])],
    )
    with pytest.raises(ProblemFileError) as info:
        parse_problem(doc)
    assert info.value.field == "generators"


def test_second_group_needs_symmetric_form():
    with pytest.raises(ProblemFileError) as info:
        parse_problem(qubit_doc(second_group=[encode_matrix(np.eye(2))]))
    assert info.value.field == "second_group"


def test_load_files(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps(qubit_doc()))
    assert load_problem(p).dim == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ProblemFileError, match="invalid JSON at line 1"):
        load_problem(bad)
    with pytest.raises(ProblemFileError, match="cannot read"):
        load_problem(tmp_path / "missing.json")


def test_load_povm_and_certificate(tmp_path):
    ops = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"povm": {"operators": [encode_matrix(o) for o in ops]}}))
    m = load_povm(p, 2)
    assert len(m) == 2
    with pytest.raises(ProblemFileError):
        load_povm(p, 3)
    c = tmp_path / "c.json"
    c.write_text(json.dumps({"x": encode_matrix(np.eye(2) / 2)}))
    np.testing.assert_allclose(load_certificate(c, 2), np.eye(2) / 2)
    with pytest.raises(DimensionMismatch):
        load_certificate(c, 3)


def test_document_round_trip():
    rng = np.random.default_rng(SEED + 1)
    states = [linalg.random_density(3, 2, rng) for _ in range(4)]
    priors = rng.dirichlet(np.ones(4))
    prob = parse_problem(json.loads(json.dumps(problem_document(states=states, priors=priors))))
    for a, b in zip(prob.ensemble.states, states):
        assert np.max(np.abs(a - b)) < 1e-12
    np.testing.assert_allclose(prob.ensemble.priors, priors, rtol=0, atol=1e-15)
