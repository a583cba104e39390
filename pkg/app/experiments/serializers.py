"""Serializers validating experiment plan sections."""

from typing import Any

from rest_framework import serializers

from app.bayesopt.choices import (
    GRID_SOLVERS,
    AlgorithmChoices,
    BetaKindChoices,
    EtaFloorChoices,
    KernelFamilyChoices,
    NoiseKindChoices,
    ObjectiveChoices,
    SolverKindChoices,
)
from app.bayesopt.kernels import SUPPORTED_MATERN_NU

NAME_PATTERN = r"^[A-Za-z0-9][A-Za-z0-9_.-]*$"


class _StrictSerializer(serializers.Serializer):
    """Serializer rejecting keys it does not declare."""

    def validate(self, attrs: dict[str, Any]) -> dict[str, Any]:
        unknown = sorted(set(self.initial_data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        return attrs


class PlanSerializer(_StrictSerializer):
    """`[plan]` section serializer."""

    name = serializers.RegexField(NAME_PATTERN, max_length=100)
    description = serializers.CharField(required=False, allow_blank=True, default="")
    seed = serializers.IntegerField(min_value=0, default=0)
    measure_eta = serializers.BooleanField(required=False, default=False)


def _positive(value: float) -> float:
    if value <= 0:
        raise serializers.ValidationError("Ensure this value is greater than 0.")
    return value


def _unit_interval(value: float) -> float:
    if not 0.0 < value <= 1.0:
        raise serializers.ValidationError("Ensure this value lies in (0, 1].")
    return value


class ExperimentEntrySerializer(_StrictSerializer):
    """`[experiment <id>]` section serializer.

    One entry expands to one run per solver and replicate.
    """

    objective = serializers.ChoiceField(choices=ObjectiveChoices.choices)
    algorithm = serializers.ChoiceField(choices=AlgorithmChoices.choices, default=AlgorithmChoices.UCB.value)
    solvers = serializers.ListField(
        child=serializers.ChoiceField(choices=SolverKindChoices.choices),
        min_length=1,
        default=[SolverKindChoices.UNIFORM_GRID.value],
    )
    n_reps = serializers.IntegerField(min_value=1, default=1)
    T = serializers.IntegerField(min_value=1)
    n_init = serializers.IntegerField(min_value=1)

    # Surrogate
    kernel = serializers.ChoiceField(choices=KernelFamilyChoices.choices, default=KernelFamilyChoices.MATERN.value)
    nu = serializers.FloatField(default=2.5)
    lengthscale = serializers.FloatField(required=False, validators=[_positive])
    beta = serializers.ChoiceField(choices=BetaKindChoices.choices, default=BetaKindChoices.PRACTICAL.value)
    delta = serializers.FloatField(default=0.1)
    B = serializers.FloatField(required=False)
    output_scale = serializers.FloatField(required=False, validators=[_positive])
    scaled_prior = serializers.BooleanField(required=False)

    # Observations
    noise = serializers.ChoiceField(choices=NoiseKindChoices.choices, default=NoiseKindChoices.NONE.value)
    noise_level = serializers.FloatField(required=False, min_value=0.0)

    # Solvers
    grid_coefficient = serializers.IntegerField(min_value=1, default=100)
    grid_exponent = serializers.FloatField(min_value=1.0, default=1.0)
    fixed_size = serializers.IntegerField(min_value=1, default=100)
    n_starts = serializers.IntegerField(min_value=1, required=False)
    max_inner_iters = serializers.IntegerField(min_value=0, default=200)
    inner_tol = serializers.FloatField(default=1e-8, validators=[_positive])
    oracle_size = serializers.IntegerField(min_value=1, required=False)
    measure_eta = serializers.BooleanField(required=False)
    eta_floor = serializers.ChoiceField(choices=EtaFloorChoices.choices, default=EtaFloorChoices.ONE.value)
    eta_floor_value = serializers.FloatField(default=1.0, validators=[_unit_interval])
    scramble_init = serializers.BooleanField(required=False, default=True)
    audit_probes = serializers.IntegerField(min_value=0, default=0)

    # Synthetic RKHS objectives
    dim = serializers.IntegerField(min_value=1, required=False)
    n_centers = serializers.IntegerField(min_value=1, default=50)
    weight_bound = serializers.FloatField(default=1.0, validators=[_positive])
    objective_seed = serializers.IntegerField(min_value=0, default=0)

    def validate_nu(self, value: float) -> float:
        """Checks that the Matern smoothness has a closed form."""
        if value not in SUPPORTED_MATERN_NU:
            raise serializers.ValidationError(f"Must be one of {', '.join(map(str, SUPPORTED_MATERN_NU))}.")
        return value

    def validate_delta(self, value: float) -> float:
        """Checks that the confidence level lies in (0, 1)."""
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError("Ensure this value lies in (0, 1).")
        return value

    def validate(self, attrs: dict[str, Any]) -> dict[str, Any]:
        """Rejects unknown keys and incompatible combinations.

        :param attrs: field-validated values.
        :return: validated values.
        """
        attrs = super().validate(attrs)
        if attrs["algorithm"] != AlgorithmChoices.UCB:
            off_grid = [solver for solver in attrs["solvers"] if solver not in GRID_SOLVERS]
            if off_grid:
                raise serializers.ValidationError(
                    {"solvers": [f"Thompson sampling needs grid solvers, got {', '.join(off_grid)}."]}
                )
        if attrs["algorithm"] == AlgorithmChoices.TS_ENLARGED and attrs.get("B", 1.0) <= 0:
            raise serializers.ValidationError({"B": ["Enlarged-variance Thompson sampling needs B > 0."]})
        if "dim" in attrs and attrs["objective"] != ObjectiveChoices.SYNTHETIC_RKHS:
            raise serializers.ValidationError({"dim": ["Only synthetic RKHS objectives have a free dimension."]})
        if "output_scale" in attrs and attrs.get("scaled_prior"):
            raise serializers.ValidationError({"scaled_prior": ["Cannot be combined with output_scale."]})
        prior_scaled = "output_scale" in attrs or "scaled_prior" in attrs
        if prior_scaled and attrs["objective"] == ObjectiveChoices.SYNTHETIC_RKHS:
            raise serializers.ValidationError(
                {"output_scale": ["Synthetic RKHS objectives are modelled with the kernel that generated them."]}
            )
        return attrs


__all__ = ["ExperimentEntrySerializer", "PlanSerializer"]
