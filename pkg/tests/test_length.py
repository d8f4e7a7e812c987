import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorentz_inverse.errors import MissingSample, NotTimelike
from lorentz_inverse.flow import integrate_bicharacteristic
from lorentz_inverse.length import (
    ClosedFormOracle,
    LengthSample,
    QuadratureOracle,
    RecordingOracle,
    TableOracle,
    length_by_quadrature,
    length_closed_form,
    oracle_query,
    read_length_table,
    write_length_table,
)
from lorentz_inverse.metric import MetricField, hamiltonian

from conftest import sample_fields

FIELDS = sample_fields()


@pytest.mark.parametrize("eta,T,expected", [([1, 0], 2.0, 2.0), ([math.sqrt(2), 1], 3.0, 3.0)])
def test_quadrature_minkowski(mink1, eta, T, expected):
    p = integrate_bicharacteristic(mink1, [0.0], eta, T)
    assert length_by_quadrature(mink1, p) == pytest.approx(expected, abs=1e-12)


def test_quadrature_matches_closed_form_conformal(bump1):
    p = integrate_bicharacteristic(bump1, [0.3], [1, 0.2], 1.0)
    assert abs(length_by_quadrature(bump1, p) - length_closed_form(bump1, [0.3], [1, 0.2], 1.0)) <= 1e-7


def test_closed_form_values():
    assert length_closed_form(MetricField.minkowski(2), [0, 0], [2, 1, 1], 1.0) == pytest.approx(math.sqrt(2), rel=1e-15)
    d = MetricField.diagonal(1, [2, -1])
    assert length_closed_form(d, [0.4], [1, 0], 5.0) == pytest.approx(5 * math.sqrt(2), rel=1e-15)


def test_oracles_on_minkowski(mink1, tmp_path):
    assert oracle_query(ClosedFormOracle(mink1), [0.0], [1, 0]).R == 1.0
    assert oracle_query(QuadratureOracle(mink1), [0.0], [1, 0]).R == pytest.approx(1.0, abs=1e-9)
    row = LengthSample((0.25,), (1.5, 0.5), 2.0, 2.8284271247461903)
    write_length_table([row], tmp_path / "t.csv")
    table = TableOracle(read_length_table(tmp_path / "t.csv"))
    assert oracle_query(table, [0.25], [1.5, 0.5], 2.0) == row
    with pytest.raises(MissingSample):
        table.query([0.25], [1.5, 0.5], 1.0)


def test_table_header(tmp_path):
    write_length_table([LengthSample((0.0, 1.0), (1.0, 0.0, 0.0), 1.0, 1.0)], tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "n,y1,y2,eta0,eta1,eta2,T,R"


def test_recording_oracle(bump1):
    rec = RecordingOracle(ClosedFormOracle(bump1))
    rec.query([0.0], [1, 0])
    rec.query([0.0], [1, 0])
    rec.query([0.0], [1, 0.1])
    assert len(rec.samples) == 2


@pytest.mark.parametrize("field", FIELDS, ids=lambda f: f"{f.kind}{f.n}")
@settings(max_examples=15)
@given(data=st.data())
def test_closed_form_linear_in_T_and_homogeneous(field, data):
    y = np.array(data.draw(st.lists(st.floats(-2, 2), min_size=field.n, max_size=field.n)))
    eta = np.concatenate([[data.draw(st.floats(1, 2))],
                          data.draw(st.lists(st.floats(-0.3, 0.3), min_size=field.n, max_size=field.n))])
    T1, T2 = data.draw(st.floats(0.1, 3)), data.draw(st.floats(0.1, 3))
    R = lambda e, T: length_closed_form(field, y, e, T)  # noqa: E731
    assert R(eta, T1 + T2) == pytest.approx(R(eta, T1) + R(eta, T2), rel=1e-10)
    for s in (0.5, 2.0, 7.0):
        assert R(s * eta, T1) == pytest.approx(s * R(eta, T1), rel=1e-12)


@pytest.mark.parametrize("field", FIELDS, ids=lambda f: f"{f.kind}{f.n}")
@settings(max_examples=4)
@given(data=st.data())
def test_quadrature_identity(field, data):
    y = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=field.n, max_size=field.n)))
    eta = np.concatenate([[data.draw(st.floats(1, 2))],
                          data.draw(st.lists(st.floats(-0.3, 0.3), min_size=field.n, max_size=field.n))])
    T = data.draw(st.floats(0.2, 3))
    p = integrate_bicharacteristic(field, y, eta, T)
    R = length_closed_form(field, y, eta, T)
    assert abs(length_by_quadrature(field, p) - R) <= 1e-6 * (1 + R)


def test_quadrature_oracle_agrees_with_closed_form(bump1):
    q, c = QuadratureOracle(bump1), ClosedFormOracle(bump1)
    for eta in ([1, 0.2], [1.3, -0.5], [2, 1]):
        assert q.query([0.3], eta).R == pytest.approx(c.query([0.3], eta).R, rel=1e-6)


@pytest.mark.parametrize("eta", [[1, 1], [1, -1], [0, 1], [0.5, 2]])
def test_null_and_spacelike_rejected(mink1, eta):
    with pytest.raises(NotTimelike):
        length_closed_form(mink1, [0.0], eta, 1.0)
    with pytest.raises(NotTimelike):
        length_by_quadrature(mink1, integrate_bicharacteristic(mink1, [0.0], eta, 1.0))
    with pytest.raises(NotTimelike):
        QuadratureOracle(mink1).query([0.0], eta)


def test_tolerance_band_classifies_near_null(mink1):
    assert hamiltonian(mink1, [0.0], [1, 1 - 1e-12]) > 0
    with pytest.raises(NotTimelike):
        length_closed_form(mink1, [0.0], [1, 1 - 1e-12], 1.0)
