import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistgabor.field import (
    FieldFormatError, GridError, SampledField, amalgam_norm, inner_product, interior_mask, make_grid,
    partial_derivative, read_field, read_field_csv, wirtinger, write_field, write_field_csv,
)
from twistgabor.hermite import special_hermite

from conftest import chi, gaussian


def test_make_grid_small():
    g = make_grid(4, 1)
    assert g.M == 8
    assert g.h == 0.25
    assert g.coords[0] == -1.0


def test_make_grid_domain():
    g = make_grid(16, 4)
    assert g.M == 128
    assert g.coords[0] == -4.0 and g.coords[-1] < 4.0


@pytest.mark.parametrize("N,K", [(3, 1), (2, 1), (4, 0), (5, 2)])
def test_make_grid_rejects(N, K):
    with pytest.raises(GridError):
        make_grid(N, K)


def test_integer_shift_is_index_shift():
    g = make_grid(8, 2)
    assert g.index_of(1.0) - g.index_of(0.0) == g.N


def test_inner_product_area():
    g = make_grid(4, 1)
    one = SampledField(g, np.ones((g.M, g.M)))
    assert inner_product(one, one) == pytest.approx(4.0)


def test_inner_product_modulated_cells():
    g = make_grid(8, 2)
    f = SampledField(g, np.ones((g.M, g.M)))
    mod = f.multiply(lambda x, y: np.exp(2j * np.pi * x))
    assert abs(inner_product(f, mod)) < 1e-10


def test_inner_product_phi_orthogonal(g16_6):
    assert abs(inner_product(special_hermite(0, 0, g16_6), special_hermite(1, 1, g16_6))) < 1e-6


def test_inner_product_grid_mismatch():
    with pytest.raises(GridError):
        inner_product(gaussian(make_grid(8, 2)), gaussian(make_grid(8, 3)))


def test_field_rejects_nonfinite():
    g = make_grid(4, 1)
    v = np.zeros((g.M, g.M))
    v[0, 0] = np.nan
    with pytest.raises(ValueError):
        SampledField(g, v)


def test_derivative_of_x_is_one():
    g = make_grid(8, 2)
    f = SampledField.from_function(g, lambda x, y: x + 0 * y)
    d = partial_derivative(f, "x").values
    assert np.allclose(d, 1.0, atol=1e-12)  # polynomial exactness holds at the closures too


def _gauss_dx_error(N):
    g = make_grid(N, 4)
    f = gaussian(g)
    X, _ = g.mesh()
    exact = -X / 2 * f.values
    m = interior_mask(g, 2)
    return np.max(np.abs(partial_derivative(f, "x").values - exact)[m])


def test_derivative_fourth_order():
    assert _gauss_dx_error(8) / _gauss_dx_error(16) >= 15


@settings(max_examples=20, deadline=None)
@given(a=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       b=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_derivative_linear(a, b):
    g = make_grid(4, 2)
    f, h = gaussian(g), gaussian(g, 2.0, 0.5)
    lhs = partial_derivative(a * f + b * h, "y").values
    rhs = a * partial_derivative(f, "y").values + b * partial_derivative(h, "y").values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + abs(a) + abs(b)) * 50


def test_wirtinger_of_zbar_and_z():
    g = make_grid(8, 2)
    m = interior_mask(g)
    zb = SampledField.from_function(g, lambda x, y: x - 1j * y)
    z = SampledField.from_function(g, lambda x, y: x + 1j * y)
    assert np.max(np.abs(wirtinger(zb).values[m])) < 1e-10
    assert np.allclose(wirtinger(z).values[m], 1.0, atol=1e-10)


def test_wirtinger_gaussian():
    g = make_grid(16, 4)
    f = gaussian(g)
    X, Y = g.mesh()
    m = interior_mask(g)
    exact = -(X + 1j * Y) / 4 * f.values
    assert np.max(np.abs(wirtinger(f, conjugate=True).values - exact)[m]) < 1e-5


def test_amalgam_chi():
    assert amalgam_norm(chi(make_grid(8, 2)), np.inf, 1).value == pytest.approx(1.0, abs=1e-15)


def test_amalgam_homogeneous():
    f = gaussian(make_grid(8, 3))
    a = amalgam_norm(f, np.inf, 1).value
    assert amalgam_norm(f * (2 - 1j), np.inf, 1).value == pytest.approx(abs(2 - 1j) * a, rel=1e-12)


def test_amalgam_l2_l2_is_norm():
    f = gaussian(make_grid(8, 3))
    assert amalgam_norm(f, 2, 2).value == pytest.approx(f.norm(), abs=1e-10)


def test_amalgam_recompute():
    an = amalgam_norm(gaussian(make_grid(8, 3)), 3, 1.5)
    assert an.recompute() == pytest.approx(an.value, rel=1e-12)


def test_amalgam_rejects_bad_exponent():
    with pytest.raises(ValueError):
        amalgam_norm(gaussian(make_grid(8, 2)), 0, 1)


def test_norm_quadrature_order():
    # smooth compact bump: rectangle rule converges fast; at least order 2 is required
    def bump(g):
        return SampledField.from_function(g, lambda x, y: np.cos(np.pi * x / 2) ** 4 * np.cos(np.pi * y / 2) ** 4
                                          * (np.abs(x) < 1) * (np.abs(y) < 1) * (1 + 0.3 * x))
    exact = bump(make_grid(128, 2)).norm()
    e1 = abs(bump(make_grid(8, 2)).norm() - exact)
    e2 = abs(bump(make_grid(16, 2)).norm() - exact)
    assert e2 <= e1 / 4 + 1e-14


def test_tgf_roundtrip(tmp_path, g16_6):
    f = special_hermite(0, 0, g16_6)
    p = tmp_path / "g.tgf"
    write_field(f, p)
    back = read_field(p)
    assert back.spec == f.spec
    assert np.array_equal(back.values, f.values)


def test_tgf_bad_magic(tmp_path):
    f = gaussian(make_grid(4, 1))
    p = tmp_path / "g.tgf"
    write_field(f, p)
    data = bytearray(p.read_bytes())
    data[0:1] = b"X"
    p.write_bytes(bytes(data))
    with pytest.raises(FieldFormatError, match="bad magic"):
        read_field(p)


def test_tgf_truncated(tmp_path):
    p = tmp_path / "g.tgf"
    write_field(gaussian(make_grid(4, 1)), p)
    p.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(FieldFormatError):
        read_field(p)


def test_csv_roundtrip(tmp_path):
    g = make_grid(4, 1)
    f = gaussian(g).multiply(lambda x, y: np.exp(1j * x * y))
    p = tmp_path / "g.csv"
    write_field_csv(f, p)
    assert p.read_text().splitlines()[0] == "x,y,re,im"
    assert np.max(np.abs(read_field_csv(p).values - f.values)) <= 1e-15


def test_deterministic(g16_6):
    a = partial_derivative(gaussian(g16_6), "y").values
    b = partial_derivative(gaussian(g16_6), "y").values
    assert np.array_equal(a, b)
