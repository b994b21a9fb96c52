"""Request and response models for the planning service.

Requests carry whole documents (the system JSON object, scenario object,
year CSV text) rather than server-side paths, so the service holds no
state and the CLI can reuse the same operations in process.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SolverOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gap: Optional[float] = Field(
        default=None, ge=0.0,
        description="relative MIP gap; None keeps the solver default")
    jobs: int = Field(default=1, ge=1, description="concurrent day solves")


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    system: dict
    tax: float = Field(default=0.0, ge=0.0, description="$/ton")
    scenario: Optional[dict] = None
    prices: bool = Field(default=True,
                         description="extract locational prices and profits")
    options: SolverOptions = SolverOptions()


class DayResult(BaseModel):
    day_id: str
    probability: float
    cost: float
    emissions: float
    relaxed: bool
    node_count: int
    commitment: dict[str, list[int]]
    dispatch: dict[str, list[float]]
    shed: dict[str, list[float]]
    spill: dict[str, list[float]]
    flows: dict[str, list[float]]
    lmp: Optional[dict[str, list[float]]] = None


class SolveResponse(BaseModel):
    tax: float
    expected_cost: float
    expected_emissions: float
    objective: float
    tax_revenue: float
    fuel_energy: dict[str, float]
    congestion_surplus: Optional[float] = None
    profit: Optional[dict[str, float]] = None
    days: list[DayResult]


class FindTaxRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    system: dict
    target_tons: Optional[float] = None
    target_reduction: Optional[float] = Field(
        default=None, ge=0.0, lt=100.0,
        description="percent below the zero-tax baseline")
    certainty: Optional[float] = None
    bracket: tuple[float, float] = (0.0, 100.0)
    tolerance: float = 0.01
    scenario: Optional[dict] = None
    options: SolverOptions = SolverOptions()

    @model_validator(mode="after")
    def _one_target(self):
        if (self.target_tons is None) == (self.target_reduction is None):
            raise ValueError(
                "exactly one of target_tons or target_reduction is required")
        return self


class IterationRow(BaseModel):
    tax: float
    emissions: float
    cost: float
    feasible: bool
    attainment: Optional[float] = None


class FindTaxResponse(BaseModel):
    optimal_tax: Optional[float] = None
    converged: bool
    message: str = ""
    target_tons: float
    baseline_emissions: Optional[float] = None
    bisection_count: int
    iterations: list[IterationRow]
    result: Optional[SolveResponse] = None


class ParetoRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    system: dict
    mode: Literal["cap", "tax"]
    points: int = Field(default=11, ge=1)
    taxes: Optional[list[float]] = None
    bounds: Optional[tuple[float, float]] = None
    scenario: Optional[dict] = None
    options: SolverOptions = SolverOptions()

    @model_validator(mode="after")
    def _mode_arguments(self):
        if self.taxes is not None and self.mode != "tax":
            raise ValueError("taxes are only meaningful with mode='tax'")
        if self.bounds is not None and self.mode != "cap":
            raise ValueError("bounds are only meaningful with mode='cap'")
        return self


class ParetoPointRow(BaseModel):
    parameter: float
    cost: Optional[float] = None
    emissions: Optional[float] = None
    marginal_value: Optional[float] = None
    feasible: bool = True


class ParetoResponse(BaseModel):
    kind: str
    points: list[ParetoPointRow]


class ClusterRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    csv_text: str
    k: int = Field(default=5, ge=1)


class ClusterResponse(BaseModel):
    days: list[dict]
    sizes: dict[str, int]     # representative day id -> member count
    total_days: int


class ErrorBody(BaseModel):
    error: Literal["parse", "validation", "infeasible"]
    detail: str
