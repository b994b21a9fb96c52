"""HTTP front end: thin FastAPI wiring over the typed operations."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..search import InfeasibleTargetError
from ..system import ParseError, ScenarioError, ValidationError
from ..ucct import UcctInfeasibleError
from .ops import (error_kind, run_cluster, run_find_tax, run_pareto,
                  run_solve)
from .schemas import (ClusterRequest, ClusterResponse, ErrorBody,
                      FindTaxRequest, FindTaxResponse, ParetoRequest,
                      ParetoResponse, SolveRequest, SolveResponse)

_STATUS = {"parse": 422, "validation": 422, "infeasible": 409}


def create_app() -> FastAPI:
    app = FastAPI(
        title="taxgrid",
        version=__version__,
        description=("Planning service: representative-day unit commitment "
                     "under a carbon tax, minimal-tax search for an emissions "
                     "target, Pareto sampling, and day clustering."))

    async def _domain_error(request: Request, exc: Exception):
        kind = error_kind(exc)
        if kind is None:
            raise exc
        body = ErrorBody(error=kind, detail=str(exc))
        return JSONResponse(status_code=_STATUS[kind],
                            content=body.model_dump())

    # Registered per class (not on bare Exception) so responses go out
    # through the normal middleware path instead of the 500 fallback.
    for cls in (UcctInfeasibleError, InfeasibleTargetError, ParseError,
                ValidationError, ScenarioError, ValueError):
        app.add_exception_handler(cls, _domain_error)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest) -> SolveResponse:
        return run_solve(req)

    @app.post("/find-tax", response_model=FindTaxResponse)
    def find_tax(req: FindTaxRequest) -> FindTaxResponse:
        return run_find_tax(req)

    @app.post("/pareto", response_model=ParetoResponse)
    def pareto(req: ParetoRequest) -> ParetoResponse:
        return run_pareto(req)

    @app.post("/cluster", response_model=ClusterResponse)
    def cluster(req: ClusterRequest) -> ClusterResponse:
        return run_cluster(req)

    return app


app = create_app()
