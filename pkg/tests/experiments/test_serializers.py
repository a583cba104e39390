"""Tests the plan section serializers."""

import pytest

from app.experiments.serializers import ExperimentEntrySerializer, PlanSerializer


def _entry(**overrides) -> dict:
    data = {"objective": "branin", "T": "10", "n_init": "5"}
    data.update(overrides)
    return data


def test_plan_serializer_defaults() -> None:
    """Tests that only the plan name is required."""
    serializer = PlanSerializer(data={"name": "demo"})

    assert serializer.is_valid(), serializer.errors
    assert serializer.validated_data == {"name": "demo", "description": "", "seed": 0, "measure_eta": False}


@pytest.mark.parametrize("name", ["", "-demo", "two words"])
def test_plan_serializer_rejects_bad_names(name) -> None:
    """Tests that plan names must be file-name safe."""
    assert not PlanSerializer(data={"name": name}).is_valid()


def test_plan_serializer_rejects_unknown_keys() -> None:
    """Tests that undeclared keys are reported by name."""
    serializer = PlanSerializer(data={"name": "demo", "colour": "red"})

    assert not serializer.is_valid()
    assert "colour" in serializer.errors


def test_entry_serializer_defaults() -> None:
    """Tests the defaults filled in for an experiment entry."""
    serializer = ExperimentEntrySerializer(data=_entry())

    assert serializer.is_valid(), serializer.errors
    data = serializer.validated_data
    assert data["algorithm"] == "ucb"
    assert data["solvers"] == ["uniform_grid"]
    assert data["n_reps"] == 1
    assert data["T"] == 10
    assert data["nu"] == 2.5
    assert data["grid_coefficient"] == 100
    assert data["scramble_init"] is True
    assert "measure_eta" not in data
    assert "output_scale" not in data
    assert "scaled_prior" not in data


@pytest.mark.parametrize(
    "overrides, field",
    [
        ({"objective": "sphere"}, "objective"),
        ({"T": "0"}, "T"),
        ({"nu": "1.0"}, "nu"),
        ({"delta": "1.0"}, "delta"),
        ({"solvers": ["bisection"]}, "solvers"),
        ({"eta_floor_value": "0"}, "eta_floor_value"),
        ({"lengthscale": "-1"}, "lengthscale"),
        ({"grid_exponent": "0.5"}, "grid_exponent"),
        ({"output_scale": "0"}, "output_scale"),
        ({"output_scale": "4", "scaled_prior": "true"}, "scaled_prior"),
        ({"objective": "synthetic_rkhs", "scaled_prior": "true"}, "output_scale"),
    ],
)
def test_entry_serializer_rejects_invalid_values(overrides, field) -> None:
    """Tests that invalid values are reported on their field."""
    serializer = ExperimentEntrySerializer(data=_entry(**overrides))

    assert not serializer.is_valid()
    assert field in serializer.errors


def test_entry_serializer_rejects_ts_with_local_search() -> None:
    """Tests that Thompson sampling entries only accept grid solvers."""
    serializer = ExperimentEntrySerializer(data=_entry(algorithm="ts", solvers=["uniform_grid", "multistart_cg"]))

    assert not serializer.is_valid()
    assert "multistart_cg" in str(serializer.errors["solvers"][0])


def test_entry_serializer_rejects_enlarged_ts_without_bound() -> None:
    """Tests that enlarged-variance Thompson sampling rejects a nonpositive bound."""
    serializer = ExperimentEntrySerializer(data=_entry(algorithm="ts_enlarged", B="0"))

    assert not serializer.is_valid()
    assert "B" in serializer.errors


def test_entry_serializer_dimension_of_synthetic_objectives() -> None:
    """Tests that only synthetic objectives take a dimension."""
    assert ExperimentEntrySerializer(data=_entry(objective="synthetic_rkhs", dim="3")).is_valid()
    assert not ExperimentEntrySerializer(data=_entry(dim="3")).is_valid()
