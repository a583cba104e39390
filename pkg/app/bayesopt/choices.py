"""Custom text choices."""

from django.db.models import TextChoices
from django.utils.translation import gettext_lazy as _

from app.core.choices import ExtendedTextChoicesMeta


class KernelFamilyChoices(TextChoices, metaclass=ExtendedTextChoicesMeta):
    """Kernel families enum."""

    SQUARED_EXPONENTIAL = "squared_exponential", _("Squared exponential")
    MATERN = "matern", _("Matern")


class BetaKindChoices(TextChoices, metaclass=ExtendedTextChoicesMeta):
    """Exploration schedules enum."""

    THEORETICAL = "theoretical", _("Theoretical")
    PRACTICAL = "practical", _("Practical")


class AcquisitionKindChoices(TextChoices, metaclass=ExtendedTextChoicesMeta):
    """Acquisition functions enum."""

    UCB = "ucb", _("Upper confidence bound")
    TS = "ts", _("Thompson sample")


class AlgorithmChoices(TextChoices, metaclass=ExtendedTextChoicesMeta):
    """Bayesian optimization algorithms enum."""

    UCB = "ucb", _("GP-UCB")
    TS = "ts", _("GP-TS")
    TS_ENLARGED = "ts_enlarged", _("Enlarged-variance GP-TS")


class SolverKindChoices(TextChoices, metaclass=ExtendedTextChoicesMeta):
    """Acquisition solvers enum."""

    UNIFORM_GRID = "uniform_grid", _("Uniform random grid")
    FIXED_GRID = "fixed_grid", _("Fixed-size random grid")
    MULTISTART_SIMPLEX = "multistart_simplex", _("Multi-start Nelder-Mead")
    MULTISTART_GRADIENT = "multistart_gradient", _("Multi-start projected gradient ascent")
    MULTISTART_LBFGSB = "multistart_lbfgsb", _("Multi-start L-BFGS-B")
    MULTISTART_CG = "multistart_cg", _("Multi-start conjugate gradient")
    REFERENCE_ORACLE = "reference_oracle", _("Dense reference oracle")


class NoiseKindChoices(TextChoices, metaclass=ExtendedTextChoicesMeta):
    """Observation noise models enum."""

    NONE = "none", _("Noise-free")
    GAUSSIAN = "gaussian", _("Gaussian")


class ObjectiveChoices(TextChoices, metaclass=ExtendedTextChoicesMeta):
    """Benchmark objectives enum."""

    BRANIN = "branin", _("Branin")
    RASTRIGIN3 = "rastrigin3", _("Rastrigin (3D)")
    HARTMANN3 = "hartmann3", _("Hartmann (3D)")
    HARTMANN4 = "hartmann4", _("Hartmann (4D)")
    LEVY5 = "levy5", _("Levy (5D)")
    HARTMANN6 = "hartmann6", _("Hartmann (6D)")
    SYNTHETIC_RKHS = "synthetic_rkhs", _("Synthetic RKHS function")


class EtaFloorChoices(TextChoices, metaclass=ExtendedTextChoicesMeta):
    """Worst-case solver accuracy schedules enum."""

    ONE = "one", _("Exact")
    CONSTANT = "constant", _("Constant")
    SQRT_DECAY = "sqrt_decay", _("1 - 1/sqrt(t + 1)")


GRID_SOLVERS = frozenset({SolverKindChoices.UNIFORM_GRID, SolverKindChoices.FIXED_GRID})
GRADIENT_SOLVERS = frozenset(
    {
        SolverKindChoices.MULTISTART_GRADIENT,
        SolverKindChoices.MULTISTART_LBFGSB,
        SolverKindChoices.MULTISTART_CG,
    }
)
LOCAL_SEARCH_SOLVERS = GRADIENT_SOLVERS | {SolverKindChoices.MULTISTART_SIMPLEX}


__all__ = [
    "GRADIENT_SOLVERS",
    "GRID_SOLVERS",
    "LOCAL_SEARCH_SOLVERS",
    "AcquisitionKindChoices",
    "AlgorithmChoices",
    "BetaKindChoices",
    "EtaFloorChoices",
    "KernelFamilyChoices",
    "NoiseKindChoices",
    "ObjectiveChoices",
    "SolverKindChoices",
]
