import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fewbit.channels import real_stack
from fewbit.errors import DimensionError, InvalidSelectionError
from fewbit.pilots import (
    PilotMatrix,
    PowerConstraint,
    column_power,
    dft_pilot,
    effective_adjoint,
    effective_apply,
    effective_matrix,
    noiseless_real,
    pilot_from_real,
    project_power,
    random_pilot,
    read_pilot_csv,
    real_embedding,
    spread_columns,
    validate_power,
    write_pilot_csv,
)


def _cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_dft_orthogonality():
    p = dft_pilot(4, [0, 2])
    np.testing.assert_allclose(p.gram(), 4 * np.eye(2), atol=1e-12)


def test_dft_tau_two_by_hand():
    np.testing.assert_array_equal(dft_pilot(2, [0, 1]).phi, [[1, 1], [1, -1]])


@pytest.mark.parametrize("idx", [[1, 1], [0, 4], [-1, 2], []])
def test_dft_invalid_selection(idx):
    with pytest.raises(InvalidSelectionError):
        dft_pilot(4, idx)


def test_spread_columns():
    assert spread_columns(16, 4) == [0, 4, 8, 12]
    with pytest.raises(InvalidSelectionError):
        spread_columns(2, 3)


def test_validate_power_examples():
    p = dft_pilot(8, [1, 3, 5])
    per_col = PowerConstraint.per_column(8)
    assert validate_power(p, per_col)
    assert not validate_power(PilotMatrix(2 * p.phi), per_col)
    assert validate_power(p, PowerConstraint.sum_power(8, 3))


def test_project_per_column_halves_long_column():
    tau = 4
    phi = np.ones((tau, 2), dtype=complex)
    phi[:, 0] *= 2  # norm 2 sqrt(tau)
    out = project_power(PilotMatrix(phi), PowerConstraint.per_column(tau))
    np.testing.assert_allclose(np.sqrt(column_power(out)), [np.sqrt(tau), np.sqrt(tau)])
    np.testing.assert_array_equal(out.phi[:, 1], phi[:, 1])


def test_project_sum_power():
    tau, k = 3, 2
    phi = 2 * np.ones((tau, k), dtype=complex)  # ||Phi||_F^2 = 4 tau K
    out = project_power(PilotMatrix(phi), PowerConstraint.sum_power(tau, k))
    assert np.isclose(column_power(out).sum(), tau * k)


def test_project_feasible_is_identity():
    p = dft_pilot(16, [0, 5, 9, 13])
    out = project_power(p, PowerConstraint.per_column(16))
    np.testing.assert_array_equal(out.phi, p.phi)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (6, 3), elements=st.floats(-10, 10)), st.sampled_from(["per-column", "sum"]))
def test_projection_feasible_and_idempotent(a, kind):
    phi = a[:3] + 1j * a[3:]
    constraint = PowerConstraint.for_pilot(kind, 3, 3)
    once = project_power(PilotMatrix(phi), constraint)
    twice = project_power(once, constraint)
    assert validate_power(once, constraint)
    np.testing.assert_array_equal(once.phi, twice.phi)


def test_real_embedding_definitions():
    np.testing.assert_array_equal(real_embedding(np.array([[1j]])).phi_reim, [[0, -1], [1, 0]])
    np.testing.assert_array_equal(real_embedding(np.array([[1 + 0j]])).phi_reim, np.eye(2))


def test_real_embedding_matches_complex_product():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        tau, k = rng.integers(1, 6, size=2)
        phi = _cplx(rng, tau, k)
        x = _cplx(rng, k)
        emb = real_embedding(phi)
        np.testing.assert_allclose(emb.phi_reim @ real_stack(x), real_stack(phi @ x), atol=1e-12)
        np.testing.assert_array_equal(pilot_from_real(emb.phi_re).phi, phi)


def test_effective_apply_identity_pilot():
    rng = np.random.default_rng(0)
    h = _cplx(rng, 3 * 2)
    np.testing.assert_allclose(effective_apply(np.eye(2), 4.0, h), 2 * h)


def test_effective_apply_single_antenna():
    rng = np.random.default_rng(1)
    phi, h = _cplx(rng, 5, 3), _cplx(rng, 3)
    np.testing.assert_allclose(effective_apply(phi, 2.0, h), np.sqrt(2) * phi @ h, atol=1e-12)


def test_effective_apply_matches_dense_kronecker():
    rng = np.random.default_rng(2)
    phi, h = _cplx(rng, 3, 2), _cplx(rng, 2 * 2)
    dense = effective_matrix(phi, 1.7, 2) @ h
    np.testing.assert_allclose(effective_apply(phi, 1.7, h), dense, atol=1e-12)
    y = _cplx(rng, 3 * 2)
    np.testing.assert_allclose(effective_adjoint(phi, 1.7, y), effective_matrix(phi, 1.7, 2).conj().T @ y,
                               atol=1e-12)


def test_effective_apply_equals_matrix_product():
    rng = np.random.default_rng(3)
    m, k, tau, rho = 3, 2, 5, 0.8
    h_mat, phi = _cplx(rng, m, k), _cplx(rng, tau, k)
    from fewbit.channels import vectorize
    np.testing.assert_allclose(effective_apply(phi, rho, vectorize(h_mat)),
                               vectorize(np.sqrt(rho) * h_mat @ phi.T), atol=1e-12)


def test_effective_apply_length_mismatch():
    with pytest.raises(DimensionError):
        effective_apply(np.eye(3), 1.0, np.ones(4))


def test_dft_adjoint_round_trip():
    rng = np.random.default_rng(4)
    p = dft_pilot(8, [1, 2, 6])
    rho, m = 2.5, 4
    h = _cplx(rng, 10, m * 3)
    back = effective_adjoint(p, rho, effective_apply(p, rho, h))
    np.testing.assert_allclose(back, rho * 8 * h, rtol=1e-9)


def test_noiseless_real_matches_complex():
    rng = np.random.default_rng(5)
    m, k, tau, rho = 2, 2, 3, 1.3
    phi = _cplx(rng, tau, k)
    h = _cplx(rng, 7, m * k)
    got = noiseless_real(real_embedding(phi).phi_re, rho, real_stack(h), m)
    np.testing.assert_allclose(got, real_stack(effective_apply(phi, rho, h)), atol=1e-12)


def test_pilot_csv_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    p = PilotMatrix(_cplx(rng, 4, 3))
    path = tmp_path / "pilot.csv"
    write_pilot_csv(p, path)
    assert path.read_text().splitlines()[0] == "row,col,re,im"
    np.testing.assert_array_equal(read_pilot_csv(path).phi, p.phi)


def test_pilot_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        PilotMatrix(np.ones(3))
    with pytest.raises(ValueError):
        PilotMatrix([[np.nan]])


@pytest.mark.parametrize("kind", ["per-column", "sum"])
def test_random_pilot_on_boundary(kind, rng):
    constraint = PowerConstraint.for_pilot(kind, 8, 3)
    pilot = random_pilot(8, 3, rng, constraint)
    power = column_power(pilot)
    assert validate_power(pilot, constraint)
    if kind == "per-column":
        np.testing.assert_allclose(power, 8.0)
    else:
        assert power.sum() == pytest.approx(24.0)


def test_pilot_csv_rejects_duplicates(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("row,col,re,im\n0,0,1.0,0.0\n0,0,2.0,0.0\n")
    with pytest.raises(DimensionError, match="duplicate"):
        read_pilot_csv(str(path))
