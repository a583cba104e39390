"""Tests custom text choices."""

import pytest

from app.bayesopt.choices import ObjectiveChoices, SolverKindChoices


def test_max_length() -> None:
    """Tests that the max length is the length of the longest value."""
    assert SolverKindChoices.max_length == len("multistart_gradient")


@pytest.mark.parametrize(
    ("raw", "expected"),
    [
        ("uniform_grid", SolverKindChoices.UNIFORM_GRID),
        ("Uniform-Grid", SolverKindChoices.UNIFORM_GRID),
        ("  multistart-lbfgsb ", SolverKindChoices.MULTISTART_LBFGSB),
    ],
)
def test_parse(raw: str, expected: SolverKindChoices) -> None:
    """Tests that parsing ignores case, dashes and surrounding spaces."""
    assert SolverKindChoices.parse(raw) == expected


def test_parse_unknown_value() -> None:
    """Tests that parsing an unknown value raises an error listing the valid ones."""
    with pytest.raises(ValueError, match="branin"):
        ObjectiveChoices.parse("rosenbrock")
