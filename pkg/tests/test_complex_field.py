"""Grid, Wirtinger derivatives, and the field dump format."""

import numpy as np
import pytest

from hitchinlab.complex_field import (
    ConfigurationError,
    d_z,
    d_zbar,
    liouville_residual,
    make_patch,
    read_field_csv,
    sample_polynomial,
    write_field_csv,
)


def test_make_patch_layout():
    patch = make_patch(0.5, 16)
    assert patch.z.shape == (16, 16)
    assert patch.z[0, 0] == -0.5 - 0.5j
    assert patch.z[0, -1] == 0.5 - 0.5j       # x runs along axis 1
    assert patch.z[-1, 0] == -0.5 + 0.5j      # y runs along axis 0
    assert np.allclose(patch.g0, 2.0 / (1.0 - np.abs(patch.z) ** 2) ** 2)


def test_make_patch_rejects_bad_arguments():
    with pytest.raises(ConfigurationError):
        make_patch(0.0, 16)
    with pytest.raises(ConfigurationError):
        make_patch(0.96, 16)
    with pytest.raises(ConfigurationError):
        make_patch(0.5, 7)


def test_wirtinger_on_holomorphic_and_antiholomorphic():
    patch = make_patch(0.6, 48)
    z = patch.z
    # quadratics are differentiated exactly by the stencils, boundary included
    assert np.abs(d_z(z ** 2, patch) - 2 * z).max() < 1e-12
    assert np.abs(d_zbar(z ** 2, patch)).max() < 1e-12
    assert np.abs(d_z(np.conj(z), patch)).max() < 1e-12
    assert np.abs(d_zbar(np.conj(z), patch) - 1.0).max() < 1e-12
    # |z|^2 = z zbar mixes both
    assert np.abs(d_z(np.abs(z) ** 2, patch) - np.conj(z)).max() < 1e-12


def test_wirtinger_second_order_convergence():
    errs = []
    for N in (24, 48, 96):
        patch = make_patch(0.5, N)
        f = np.exp(patch.z)
        errs.append(np.abs(d_z(f, patch) - f).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert (orders > 1.8).all(), orders


def test_derivatives_broadcast_over_matrix_axes():
    patch = make_patch(0.5, 24)
    F = np.zeros(patch.z.shape + (2, 2), dtype=complex)
    F[..., 0, 1] = patch.z ** 2
    D = d_z(F, patch)
    assert np.abs(D[..., 0, 1] - 2 * patch.z).max() < 1e-12
    assert np.abs(D[..., 1, 0]).max() == 0.0


def test_liouville_residual_shrinks():
    vals = [liouville_residual(make_patch(0.5, N)) for N in (24, 48, 96)]
    assert vals[0] > vals[1] > vals[2]
    # first order overall (edge ring), better further in
    assert vals[2] < 0.7 * vals[1]


def test_sample_polynomial():
    patch = make_patch(0.5, 12)
    assert np.abs(sample_polynomial([], patch)).max() == 0.0
    vals = sample_polynomial([1.0, 2.0j, -0.5], patch)
    direct = 1.0 + 2.0j * patch.z - 0.5 * patch.z ** 2
    assert np.abs(vals - direct).max() < 1e-15


def test_field_csv_round_trip_scalar(tmp_path):
    patch = make_patch(0.4, 12)
    field = np.sin(patch.z.real) + 1j * patch.z.imag ** 3
    path = tmp_path / "f.csv"
    write_field_csv(path, "energy", field, patch, 3)
    name, back, meta = read_field_csv(path)
    assert name == "energy"
    assert meta == {"n": 3, "N": 12, "R": 0.4}
    assert np.array_equal(back, field)        # 17 digits -> bit-exact


def test_field_csv_round_trip_matrix(tmp_path):
    patch = make_patch(0.4, 10)
    rng = np.random.default_rng(3)
    field = rng.normal(size=(10, 10, 2, 2)) + 1j * rng.normal(size=(10, 10, 2, 2))
    path = tmp_path / "m.csv"
    write_field_csv(path, "S", field, patch, 2)
    name, back, meta = read_field_csv(path)
    assert name == "S"
    assert back.shape == (10, 10, 2, 2)
    assert np.array_equal(back, field)


def test_field_csv_rejects_malformed(tmp_path):
    patch = make_patch(0.4, 10)
    with pytest.raises(ValueError):
        write_field_csv(tmp_path / "x.csv", "f", np.zeros((9, 9)), patch, 2)
    bad = tmp_path / "bad.csv"
    bad.write_text("0,0,0,1,0\n")
    with pytest.raises(ValueError):
        read_field_csv(bad)
