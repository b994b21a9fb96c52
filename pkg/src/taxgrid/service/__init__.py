from .app import app, create_app
from .schemas import (ClusterRequest, ClusterResponse, FindTaxRequest,
                      FindTaxResponse, ParetoRequest, ParetoResponse,
                      SolveRequest, SolveResponse, SolverOptions)

__all__ = [
    "app", "create_app",
    "ClusterRequest", "ClusterResponse", "FindTaxRequest", "FindTaxResponse",
    "ParetoRequest", "ParetoResponse", "SolveRequest", "SolveResponse",
    "SolverOptions",
]
