import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfisim import units as u
from sfisim.errors import ConfigurationError, IngestionError
from sfisim.grid import (PermeabilityField, build_cartesian_grid, load_permeability_csv,
                         lognormal_field)


def uniform_grid(nx, nz, perm=1e-13, d=1.0):
    return build_cartesian_grid(nx, nz, d, d, d, PermeabilityField.uniform(nx * nz, perm, 0.2))


def test_single_cell_has_no_faces():
    g = uniform_grid(1, 1)
    assert g.n_faces == 0
    assert g.trans.size == 0


def test_equal_perm_transmissibility():
    g = uniform_grid(2, 1)
    assert g.n_faces == 1
    assert g.trans[0] == pytest.approx(1e-13, rel=1e-14)


def test_harmonic_transmissibility():
    field = PermeabilityField(np.array([1e-13, 3e-13]), np.full(2, 0.2))
    g = build_cartesian_grid(2, 1, 1.0, 1.0, 1.0, field)
    # half transmissibilities 2e-13 and 6e-13 in series
    assert g.trans[0] == pytest.approx(1.5e-13, rel=1e-14)


def test_face_layout_and_depth():
    g = uniform_grid(3, 2)
    assert g.n_faces == 2 * 2 + 3
    assert np.all(g.face_i < g.face_j)
    assert np.all(g.dh[~g.vertical] == 0)
    # depth increases downward: the lower cell of a vertical face is deeper
    assert np.all(g.dh[g.vertical] > 0)
    assert g.cell_index(2, 1) == 5


@given(st.integers(1, 6), st.integers(1, 6))
def test_face_count(nx, nz):
    g = uniform_grid(nx, nz)
    assert g.n_faces == (nx - 1) * nz + nx * (nz - 1)
    assert g.pore_volume().sum() == pytest.approx(0.2 * nx * nz)


def test_rejects_bad_field():
    with pytest.raises(ConfigurationError):
        PermeabilityField(np.array([1e-13, -1.0]), np.full(2, 0.2))
    with pytest.raises(ConfigurationError):
        build_cartesian_grid(2, 2, 1, 1, 1, PermeabilityField.uniform(3, 1e-13, 0.2))


def test_load_uniform_csv(tmp_path):
    f = tmp_path / "k.csv"
    f.write_text("100,100,100,100\n")
    field = load_permeability_csv(f, 2, 2)
    np.testing.assert_allclose(field.perm, 100 * u.MD)


def test_load_wrong_count(tmp_path):
    f = tmp_path / "k.csv"
    f.write_text("100,100,100\n")
    with pytest.raises(IngestionError, match="expected 4 values, found 3"):
        load_permeability_csv(f, 2, 2)


def test_load_negative_entry_named(tmp_path):
    f = tmp_path / "k.csv"
    f.write_text("100 100\n100 -5\n")
    with pytest.raises(IngestionError, match=r"row 2, column 2.*-5"):
        load_permeability_csv(f, 2, 2)


def test_lognormal_seeded():
    a, b = lognormal_field(50, 3), lognormal_field(50, 3)
    np.testing.assert_array_equal(a.perm, b.perm)
    assert not np.array_equal(a.perm, lognormal_field(50, 4).perm)
    assert np.all((a.poro >= 0.02) & (a.poro <= 0.35))
