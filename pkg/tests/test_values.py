"""Value semantics: equality, JSON mapping, rendering, failure values."""
import pytest

from recompose.values import (
    Bottom, is_bottom, render_value, value_from_json, value_to_json,
    values_equal,
)


def test_plain_equality():
    assert values_equal("a", "a")
    assert values_equal(3, 3)
    assert values_equal(["a", ["b", 1]], ["a", ["b", 1]])
    assert not values_equal("a", "b")
    assert not values_equal(3, 4)


def test_bool_is_not_int():
    """true/1 and false/0 must stay distinct despite Python's bool <= int."""
    assert not values_equal(True, 1)
    assert not values_equal(1, True)
    assert not values_equal(False, 0)
    assert values_equal(True, True)


def test_list_is_not_tuple():
    assert not values_equal([1], (1,))
    assert values_equal((1, "a"), (1, "a"))


def test_bottom_equals_nothing():
    assert not values_equal(Bottom("x"), Bottom("x"))
    assert not values_equal(Bottom("x"), "x")
    assert is_bottom(Bottom("why"))
    assert not is_bottom("why")


def test_json_round_trip():
    for v in ["a", 0, -3, True, False, ["x", [1, True]], []]:
        assert values_equal(value_from_json(value_to_json(v)), v)


def test_json_maps_tuples_to_arrays():
    assert value_to_json(("a", ("b",))) == ["a", ["b"]]
    # arrays always come back as lists
    assert value_from_json(["a", ["b"]]) == ["a", ["b"]]


def test_json_rejects_unsupported():
    with pytest.raises((TypeError, ValueError)):
        value_from_json({"not": "a value"})
    with pytest.raises((TypeError, ValueError)):
        value_from_json(1.5)


def test_render_value():
    assert render_value(["a", 1, True]) == '["a", 1, true]'
    assert render_value("x") == '"x"'
    assert render_value(Bottom("boom")) == "<bottom: boom>"
