"""Experiment plans: parsing, canonical serialization and expansion into run payloads.

A plan is a sectioned key-value text file::

    [plan]
    name = demo
    seed = 0

    [experiment branin]
    objective = branin
    solvers = uniform_grid, multistart_simplex
    n_reps = 20
    T = 80
    n_init = 20

Lines starting with ``#`` or ``;`` are comments.
"""

import hashlib
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, TypedDict

from app.bayesopt.acquisition import BetaSchedule
from app.bayesopt.choices import (
    AlgorithmChoices,
    BetaKindChoices,
    EtaFloorChoices,
    KernelFamilyChoices,
    NoiseKindChoices,
    ObjectiveChoices,
    SolverKindChoices,
)
from app.bayesopt.domain import Box
from app.bayesopt.engine import BoConfig, EtaFloorSchedule, norm_bound, scaled_output_scale
from app.bayesopt.kernels import KernelSpec, default_lengthscale
from app.bayesopt.objectives import (
    SYNTHETIC_RKHS_DIM,
    NoiseModel,
    ObjectiveSpec,
    benchmark,
    default_noise,
    synthetic_rkhs_objective,
)
from app.bayesopt.solvers import DEFAULT_ORACLE_SIZE, SolverSpec
from app.core.exceptions import PlanError

from .serializers import ExperimentEntrySerializer, PlanSerializer

BUILTIN_PLANS_DIR = Path(__file__).resolve().parent / "builtin_plans"
PLAN_SUFFIX = ".ini"
LIST_KEYS = frozenset({"solvers"})

_SECTION = re.compile(r"^\[\s*(?P<kind>plan|experiment)(?:\s+(?P<id>[A-Za-z0-9][A-Za-z0-9_.-]*))?\s*\]$")
_ENTRY = re.compile(r"^(?P<key>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*(?P<value>.*)$")


@dataclass(frozen=True)
class ExperimentEntry:
    """One validated `[experiment <id>]` section."""

    id: str
    settings: dict[str, Any]


@dataclass(frozen=True)
class ExperimentPlan:
    """A validated plan: global settings and its experiments, in file order."""

    name: str
    seed: int = 0
    description: str = ""
    measure_eta: bool = False
    entries: tuple[ExperimentEntry, ...] = field(default_factory=tuple)

    @property
    def n_runs(self) -> int:
        return sum(len(entry.settings["solvers"]) * entry.settings["n_reps"] for entry in self.entries)


@dataclass
class _Section:
    kind: str
    id: str | None
    line: int
    values: dict[str, str | list[str]] = field(default_factory=dict)
    lines: dict[str, int] = field(default_factory=dict)


def _split_sections(text: str, path: str) -> list[_Section]:
    sections: list[_Section] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("["):
            match = _SECTION.match(line)
            if match is None:
                raise PlanError(f"malformed section header '{line}'", path=path, line=number)
            kind, section_id = match.group("kind"), match.group("id")
            if kind == "plan" and section_id is not None:
                raise PlanError("the [plan] section takes no identifier", path=path, line=number)
            if kind == "experiment" and section_id is None:
                raise PlanError("experiment sections need an identifier", path=path, line=number)
            duplicate = any(s.kind == kind and s.id == section_id for s in sections)
            if duplicate:
                raise PlanError(f"duplicate section '{line}'", path=path, line=number)
            sections.append(_Section(kind=kind, id=section_id, line=number))
            continue
        match = _ENTRY.match(line)
        if match is None:
            raise PlanError(f"expected 'key = value', got '{line}'", path=path, line=number)
        if not sections:
            raise PlanError("key outside of any section", path=path, line=number)
        section = sections[-1]
        key, value = match.group("key"), match.group("value").strip()
        if key in section.values:
            raise PlanError(f"duplicate key '{key}'", path=path, line=number)
        section.values[key] = [item.strip() for item in value.split(",") if item.strip()] if key in LIST_KEYS else value
        section.lines[key] = number
    return sections


def _first_error(errors: dict[str, Any]) -> tuple[str | None, str]:
    """Offending key (``None`` for section-wide errors) and first message of DRF errors."""
    key = next(iter(errors))
    messages = errors[key]
    while isinstance(messages, dict):
        messages = next(iter(messages.values()))
    message = messages[0] if isinstance(messages, list) else messages
    return (None if key == "non_field_errors" else key), str(message)


def _validate(serializer_class: type, section: _Section, path: str) -> dict[str, Any]:
    serializer = serializer_class(data=section.values)
    if not serializer.is_valid():
        key, message = _first_error(serializer.errors)
        line = section.lines.get(key, section.line) if key else section.line
        prefix = f"'{key}': " if key else ""
        raise PlanError(f"{prefix}{message}", path=path, line=line)
    return dict(serializer.validated_data)


def parse_plan_text(text: str, path: str = "<plan>") -> ExperimentPlan:
    """Parses and validates plan text.

    :param text: plan file contents.
    :param path: name used in error locations.
    :return: `ExperimentPlan`.
    :raises PlanError: at the first invalid line.
    """
    sections = _split_sections(text, path)
    plan_sections = [section for section in sections if section.kind == "plan"]
    if not plan_sections:
        raise PlanError("missing [plan] section", path=path, line=1)
    plan_settings = _validate(PlanSerializer, plan_sections[0], path)
    entries = tuple(
        ExperimentEntry(id=section.id, settings=_validate(ExperimentEntrySerializer, section, path))  # type: ignore
        for section in sections
        if section.kind == "experiment"
    )
    return ExperimentPlan(entries=entries, **plan_settings)


def parse_plan(path: str | Path) -> ExperimentPlan:
    """Reads and validates a plan file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise PlanError(f"cannot read plan: {e.strerror}", path=str(path)) from e
    return parse_plan_text(text, path=str(path))


def builtin_plan_names() -> list[str]:
    return sorted(plan.stem for plan in BUILTIN_PLANS_DIR.glob(f"*{PLAN_SUFFIX}"))


def load_plan(reference: str | Path) -> ExperimentPlan:
    """Loads a plan from a file path, or a built-in plan by name."""
    path = Path(reference)
    if path.is_file():
        return parse_plan(path)
    if str(reference) in builtin_plan_names():
        return parse_plan(BUILTIN_PLANS_DIR / f"{reference}{PLAN_SUFFIX}")
    raise PlanError("no such plan file or built-in plan", path=str(reference))


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list | tuple):
        return ", ".join(_format(item) for item in value)
    return str(value)


def serialize_plan(plan: ExperimentPlan) -> str:
    """Canonical plan text; parsing it gives back an equal plan."""
    lines = [
        "[plan]",
        f"name = {plan.name}",
        f"description = {plan.description}",
        f"seed = {plan.seed}",
        f"measure_eta = {_format(plan.measure_eta)}",
    ]
    field_order = list(ExperimentEntrySerializer().fields)
    for entry in plan.entries:
        lines += ["", f"[experiment {entry.id}]"]
        for key in field_order:
            if key in entry.settings:
                lines.append(f"{key} = {_format(entry.settings[key])}")
    return "\n".join(lines) + "\n"


def plan_hash(plan: ExperimentPlan) -> str:
    return hashlib.sha256(serialize_plan(plan).encode("utf-8")).hexdigest()[:16]


def with_seed(plan: ExperimentPlan, seed: int | None) -> ExperimentPlan:
    if seed is None:
        return plan
    if seed < 0:
        raise PlanError("seed must be nonnegative", path=plan.name)
    return replace(plan, seed=seed)


class RunPayload(TypedDict):
    """JSON-able description of a single replicate run."""

    plan_hash: str
    experiment: str
    solver: str
    seed: int
    measure_eta: bool
    settings: dict[str, Any]


def expand_plan(plan: ExperimentPlan) -> list[RunPayload]:
    """One payload per (experiment, solver, replicate), in plan order.

    Replicate i of every solver uses seed ``plan.seed + i``, so solvers are compared on the same
    initial designs.
    """
    digest = plan_hash(plan)
    payloads: list[RunPayload] = []
    for entry in plan.entries:
        settings = entry.settings
        measure_eta = settings.get("measure_eta", plan.measure_eta)
        for solver in settings["solvers"]:
            for replicate in range(settings["n_reps"]):
                payloads.append(
                    RunPayload(
                        plan_hash=digest,
                        experiment=entry.id,
                        solver=solver,
                        seed=plan.seed + replicate,
                        measure_eta=measure_eta,
                        settings=settings,
                    )
                )
    return payloads


def run_key(payload: RunPayload) -> str:
    """File-name-safe identifier of a run."""
    return f"{payload['experiment']}__{payload['solver']}__s{payload['seed']}"


@lru_cache(maxsize=32)
def _cached_benchmark(name: ObjectiveChoices) -> ObjectiveSpec:
    return benchmark(name)


@lru_cache(maxsize=32)
def _cached_synthetic(seed: int, dim: int, n_centers: int, weight_bound: float, kernel: KernelSpec) -> ObjectiveSpec:
    return synthetic_rkhs_objective(seed, dim=dim, n_centers=n_centers, weight_bound=weight_bound, kernel=kernel)


def _kernel(settings: dict[str, Any], domain: Box, output_scale: float) -> KernelSpec:
    return KernelSpec(
        family=KernelFamilyChoices(settings["kernel"]),
        lengthscale=settings.get("lengthscale", default_lengthscale(domain.widths)),
        nu=settings["nu"],
        output_scale=output_scale,
    )


def build_objective(settings: dict[str, Any]) -> tuple[ObjectiveSpec, KernelSpec]:
    """Objective of an experiment entry and the GP prior to model it with."""
    name = ObjectiveChoices(settings["objective"])
    if name == ObjectiveChoices.SYNTHETIC_RKHS:
        dim = settings.get("dim", SYNTHETIC_RKHS_DIM)
        kernel = _kernel(settings, Box.cube(0.0, 1.0, dim), 1.0)
        objective = _cached_synthetic(
            settings["objective_seed"], dim, settings["n_centers"], settings["weight_bound"], kernel
        )
        return objective, kernel
    objective = _cached_benchmark(name)
    if settings.get("scaled_prior"):
        output_scale = scaled_output_scale(objective)
    else:
        output_scale = settings.get("output_scale", 1.0)
    return objective, _kernel(settings, objective.domain, output_scale)


def entry_dim(settings: dict[str, Any]) -> int:
    """Input dimension of an experiment entry's objective."""
    name = ObjectiveChoices(settings["objective"])
    if name == ObjectiveChoices.SYNTHETIC_RKHS:
        return int(settings.get("dim", SYNTHETIC_RKHS_DIM))
    return _cached_benchmark(name).dim


def build_config(payload: RunPayload, oracle_size: int = DEFAULT_ORACLE_SIZE) -> BoConfig:
    """Resolves a payload into a `BoConfig`.

    :param oracle_size: reference-oracle size used when the entry does not set one.
    """
    settings = payload["settings"]
    objective, kernel = build_objective(settings)
    algorithm = AlgorithmChoices(settings["algorithm"])
    solver_kind = SolverKindChoices(payload["solver"])

    noise_kind = NoiseKindChoices(settings["noise"])
    if noise_kind == NoiseKindChoices.NONE:
        noise = NoiseModel()
    elif "noise_level" in settings:
        noise = NoiseModel(kind=noise_kind, R=settings["noise_level"])
    else:
        noise = default_noise(objective)

    B = settings.get("B", norm_bound(objective))
    if solver_kind == SolverKindChoices.UNIFORM_GRID:
        delta_divisor = 2 if algorithm == AlgorithmChoices.UCB else 3
    else:
        delta_divisor = 1

    return BoConfig(
        algorithm=algorithm,
        objective=objective,
        kernel=kernel,
        beta_schedule=BetaSchedule(
            kind=BetaKindChoices(settings["beta"]),
            B=B,
            R=noise.R,
            delta=settings["delta"],
            delta_divisor=delta_divisor,
        ),
        solver=SolverSpec(
            kind=solver_kind,
            grid_coefficient=settings["grid_coefficient"],
            grid_exponent=settings["grid_exponent"],
            fixed_size=settings["fixed_size"],
            n_starts=settings.get("n_starts"),
            max_inner_iters=settings["max_inner_iters"],
            inner_tol=settings["inner_tol"],
            oracle_size=settings.get("oracle_size", oracle_size),
        ),
        eta_floor=EtaFloorSchedule(kind=EtaFloorChoices(settings["eta_floor"]), value=settings["eta_floor_value"]),
        noise=noise,
        n_init=settings["n_init"],
        T=settings["T"],
        seed=payload["seed"],
        measure_eta=payload["measure_eta"],
        B=B,
        scramble_init=settings["scramble_init"],
        audit_probes=settings["audit_probes"],
    )


__all__ = [
    "ExperimentEntry",
    "ExperimentPlan",
    "RunPayload",
    "build_config",
    "build_objective",
    "entry_dim",
    "builtin_plan_names",
    "expand_plan",
    "load_plan",
    "parse_plan",
    "parse_plan_text",
    "plan_hash",
    "run_key",
    "serialize_plan",
    "with_seed",
]
