"""Grid field container, interchange formats, and quadrature."""

import numpy as np
import pytest

from ssblow.gridio import ScalarField2D, gradient, trapezoid_2d


def make_field(rng, n1=7, n2=9):
    return ScalarField2D(rng.standard_normal((n1, n2)), 0.25, 0.5, -1.5, -2.0)


def test_binary_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    f = make_field(rng)
    path = tmp_path / "field.bin"
    f.to_binary(path)
    g = ScalarField2D.from_binary(path)
    assert np.array_equal(f.values, g.values)
    assert (g.h1, g.h2, g.x1_0, g.x2_0) == (f.h1, f.h2, f.x1_0, f.x2_0)


def test_binary_header_size(tmp_path):
    f = ScalarField2D(np.zeros((3, 4)), 0.1, 0.2)
    path = tmp_path / "f.bin"
    f.to_binary(path)
    assert path.stat().st_size == 6 * 8 + 3 * 4 * 8


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    f = make_field(rng, 5, 6)
    path = tmp_path / "field.csv"
    f.to_csv(path)
    g = ScalarField2D.from_csv(path)
    assert np.allclose(f.values, g.values, atol=0)
    assert g.h1 == pytest.approx(f.h1)
    assert g.x1_0 == pytest.approx(f.x1_0)


def test_axes_and_mesh():
    f = ScalarField2D(np.zeros((3, 4)), 0.5, 0.25, 1.0, 2.0)
    assert np.allclose(f.axis1(), [1.0, 1.5, 2.0])
    assert np.allclose(f.axis2(), [2.0, 2.25, 2.5, 2.75])
    R, Z = f.mesh()
    assert R.shape == (3, 4) and Z[0, -1] == 2.75


def test_rejects_non_2d():
    with pytest.raises(ValueError):
        ScalarField2D(np.zeros(4), 0.1, 0.1)
    f = ScalarField2D(np.zeros((3, 4)), 0.1, 0.1)
    with pytest.raises(ValueError):
        f.like(np.zeros((4, 3)))


def test_gradient_second_order():
    n = 41
    x = np.linspace(0.0, 1.0, n)
    y = np.linspace(0.0, 2.0, n)
    X, Y = np.meshgrid(x, y, indexing="ij")
    f = ScalarField2D(np.sin(X) * np.cos(Y), x[1] - x[0], y[1] - y[0])
    d1, d2 = gradient(f)
    h = x[1] - x[0]
    assert np.max(np.abs(d1 - np.cos(X) * np.cos(Y))) < 5 * h ** 2
    assert np.max(np.abs(d2 + np.sin(X) * np.sin(Y))) < 5 * (y[1] - y[0]) ** 2


def test_trapezoid_exact_on_bilinear():
    x = np.linspace(0.0, 1.0, 11)
    y = np.linspace(0.0, 1.0, 21)
    X, Y = np.meshgrid(x, y, indexing="ij")
    val = trapezoid_2d(2.0 + 3.0 * X + 4.0 * Y, x[1] - x[0], y[1] - y[0])
    assert val == pytest.approx(2.0 + 1.5 + 2.0, rel=1e-13)
