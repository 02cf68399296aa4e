import numpy as np
import pytest

from affine_entropy import catalog, lie
from affine_entropy.errors import IndexOutOfRange, ParseError


def test_catalog_lookup():
    assert catalog.get_algebra("rn:4").dim == 4
    assert catalog.get_algebra("heis3").nilpotency_class == 2
    with pytest.raises(KeyError):
        catalog.get_algebra("so3")


def test_one_based_structure_indices():
    data = {"dim": 2, "structure": [[1, 2, 2, 1.0], [2, 1, 2, -1.0]],
            "rep_basis": [[[1, 0], [0, 0]], [0, 1, 0, 0]]}
    T = catalog.algebra_from_dict(data)
    np.testing.assert_allclose(lie.bracket(T, [1, 0], [0, 1]), [0, 1])
    assert lie.validate_algebra(T).passed


def test_index_out_of_range():
    data = {"dim": 2, "structure": [[1, 3, 2, 1.0]], "rep_basis": [[[1, 0], [0, 0]], [[0, 1], [0, 0]]]}
    with pytest.raises(IndexOutOfRange):
        catalog.algebra_from_dict(data)


def test_missing_fields():
    with pytest.raises(ParseError):
        catalog.algebra_from_dict({"structure": []})
    with pytest.raises(ParseError):
        catalog.algebra_from_dict({"dim": 1})


def test_dict_round_trip(tmp_path):
    import tomli_w
    H = catalog.heis3()
    path = tmp_path / "h.toml"
    path.write_text(tomli_w.dumps({"algebra": catalog.algebra_to_dict(H)}))
    T = catalog.load_algebra(path)
    assert T.structure == H.structure
    np.testing.assert_array_equal(T.rep_basis, H.rep_basis)
    assert T.basis_names == H.basis_names


def test_load_syntax_error(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("dim = \n")
    with pytest.raises(ParseError):
        catalog.load_algebra(path)
