import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorentz_inverse.errors import ConfigError, DomainError, SignatureViolation
from lorentz_inverse.metric import (
    CovectorClass,
    MetricField,
    classify_covector,
    evaluate_inverse_metric,
    evaluate_metric,
    hamiltonian,
    hamiltonian_gradients,
)

from conftest import sample_fields

FIELDS = sample_fields()
coords = st.floats(-3, 3, allow_nan=False)


def test_minkowski_inverse_metric(mink1):
    assert np.array_equal(evaluate_inverse_metric(mink1, [0.7]), [[1, 0], [0, -1]])
    assert np.array_equal(evaluate_metric(mink1, [0.7]), [[1, 0], [0, -1]])


def test_conformal_at_origin(bump1):
    assert np.array_equal(evaluate_inverse_metric(bump1, [0.0]), [[1.5, 0], [0, -1.5]])


def test_general_constant(tilted1):
    G = evaluate_inverse_metric(tilted1, [0.2])
    assert np.array_equal(G, [[1, 0.3], [0.3, -1]])
    assert np.linalg.det(G) == pytest.approx(-1.09)


def test_diagonal_inversion():
    f = MetricField.diagonal(1, [2, -1])
    assert np.allclose(evaluate_metric(f, [0.0]), np.diag([0.5, -1]), atol=0, rtol=1e-15)


def test_general_inverse_against_adjugate(tilted1):
    a, b, d = 1.0, 0.3, -1.0
    det = a * d - b * b
    adjugate = np.array([[d, -b], [-b, a]]) / det
    g = evaluate_metric(tilted1, [0.0])
    assert np.max(np.abs(g - adjugate)) < 1e-15
    assert np.max(np.abs(g @ evaluate_inverse_metric(tilted1, [0.0]) - np.eye(2))) < 1e-12


@pytest.mark.parametrize("n,eta,expected", [(1, [2, 1], 1.5), (2, [1, 1, 0], 0.0)])
def test_hamiltonian_minkowski(n, eta, expected):
    assert hamiltonian(MetricField.minkowski(n), np.zeros(n), eta) == expected


def test_hamiltonian_general(tilted1):
    assert hamiltonian(tilted1, [0.0], [1, 1]) == pytest.approx(0.3, abs=1e-15)


def test_gradients_minkowski(mink1):
    dx, dxi = hamiltonian_gradients(mink1, [0.4], [1, 0.5])
    assert np.array_equal(dx, [0.0])
    assert np.array_equal(dxi, [1, -0.5])


def test_gradient_linear_conformal():
    f = MetricField.conformal(1, "1 + x1")
    dx, _ = hamiltonian_gradients(f, [0.0], [1, 0])
    assert dx[0] == 0.5


@pytest.mark.parametrize("field", FIELDS, ids=lambda f: f"{f.kind}{f.n}")
@given(data=st.data())
def test_analytic_gradient_matches_central_differences(field, data):
    x = np.array(data.draw(st.lists(coords, min_size=field.n, max_size=field.n)))
    eta = np.array(data.draw(st.lists(st.floats(-2, 2), min_size=field.size, max_size=field.size)))
    central = MetricField.from_config(dict(field.to_config(), derivative_mode="central"))
    a, _ = hamiltonian_gradients(field, x, eta)
    c, _ = hamiltonian_gradients(central, x, eta)
    assert np.all(np.abs(a - c) <= np.maximum(1e-6, 1e-4 * np.abs(a)))


@pytest.mark.parametrize("field", FIELDS, ids=lambda f: f"{f.kind}{f.n}")
@given(data=st.data())
def test_symmetry_inverse_and_signature(field, data):
    x = np.array(data.draw(st.lists(coords, min_size=field.n, max_size=field.n)))
    G = evaluate_inverse_metric(field, x)
    assert np.array_equal(G, G.T)
    assert np.sum(np.linalg.eigvalsh(G) > 0) == 1
    assert np.max(np.abs(evaluate_metric(field, x) @ G - np.eye(field.size))) <= 1e-12


@pytest.mark.parametrize("field", FIELDS, ids=lambda f: f"{f.kind}{f.n}")
@given(data=st.data())
def test_hamiltonian_homogeneous_degree_two(field, data):
    x = np.array(data.draw(st.lists(coords, min_size=field.n, max_size=field.n)))
    eta = np.array(data.draw(st.lists(st.floats(-2, 2), min_size=field.size, max_size=field.size)))
    H = hamiltonian(field, x, eta)
    scale = np.max(np.abs(evaluate_inverse_metric(field, x))) * float(eta @ eta)
    for s in (2.0, 10.0, 0.5):
        assert abs(hamiltonian(field, x, s * eta) - s * s * H) <= 1e-14 * s * s * scale


@pytest.mark.parametrize("eta,cls", [
    ([1, 0], CovectorClass.TIMELIKE_PLUS),
    ([1, 1], CovectorClass.NULL),
    ([0, 1], CovectorClass.OTHER),
])
def test_classify(mink1, eta, cls):
    assert classify_covector(mink1, [0.0], eta) is cls


def test_signature_violation_reports_point():
    f = MetricField.diagonal(1, ["x1", "-1"], box=(-2, 2))
    with pytest.raises(SignatureViolation, match="x=\\[-1.0\\]"):
        evaluate_inverse_metric(f, [-1.0])


def test_out_of_box():
    f = MetricField.minkowski(1, box=(-1, 1))
    with pytest.raises(DomainError):
        evaluate_inverse_metric(f, [2.0])


def test_config_round_trip():
    cfg = {"n": 2, "kind": "general", "entries": {"00": "1", "01": "0.3", "11": "-1", "22": "-2"},
           "box": [[-1, 1], [-2, 2]]}
    f = MetricField.from_config(cfg)
    G = evaluate_inverse_metric(f, [0.0, 0.0])
    assert np.array_equal(G, [[1, 0.3, 0], [0.3, -1, 0], [0, 0, -2]])
    g = MetricField.from_config(f.to_config())
    assert np.array_equal(evaluate_inverse_metric(g, [0.5, 1.0]), G)


@pytest.mark.parametrize("cfg", [
    {"n": 1, "kind": "conformal", "entries": {"c": "x0+1"}, "box": [[-1, 1]]},
    {"n": 1, "kind": "weird", "entries": {}, "box": [[-1, 1]]},
    {"n": 1, "kind": "minkowski", "entries": {}},
    {"n": 1, "kind": "diagonal", "entries": {"00": "1"}, "box": [[-1, 1]]},
    {"n": 1, "kind": "general", "entries": {"01": "0.3", "10": "0.4"}, "box": [[-1, 1]]},
])
def test_bad_configs(cfg):
    with pytest.raises(ConfigError):
        MetricField.from_config(cfg)


def test_riemannian_field():
    f = MetricField.general(2, [[2, 0.5], [0.5, 1]], signature="riemannian")
    assert f.size == 2 and f.offset == 0
    assert np.array_equal(evaluate_inverse_metric(f, [0, 0]), [[2, 0.5], [0.5, 1]])
    with pytest.raises(SignatureViolation):
        evaluate_inverse_metric(MetricField.diagonal(2, [1, -1], signature="riemannian"), [0, 0])
