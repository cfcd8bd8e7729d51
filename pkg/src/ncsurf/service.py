"""HTTP facade over the scenario runner.

POST /run executes a scenario document, POST /selftest runs the shipped
verification suites.  Both return the report together with the exit code
the command line client should use: 0 when every check passed, 2 when a
check failed.  Scenario content that does not resolve is a 400; schema
faults are FastAPI's usual 422.  Computation happens in the core package;
this module only maps payloads.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict

from . import __version__
from .scenario import Scenario, ValidationError
from .tasks import TOOL, run_scenario, selftest_report


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    tolerance: Optional[float] = None
    seed: Optional[int] = None


class SelftestRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tolerance: float = 1e-8
    seed: int = 0


class ReportResponse(BaseModel):
    report: dict
    exit_code: int


app = FastAPI(
    title="ncsurf",
    version=__version__,
    description="Arithmetic invariants of twisted bundles over a coordinate line.",
)


@app.post("/run", response_model=ReportResponse)
def run_endpoint(request: RunRequest) -> ReportResponse:
    try:
        report = run_scenario(request.scenario,
                              tolerance=request.tolerance,
                              seed=request.seed)
    except ValidationError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return ReportResponse(report=report, exit_code=0 if report["pass"] else 2)


@app.post("/selftest", response_model=ReportResponse)
def selftest_endpoint(request: SelftestRequest) -> ReportResponse:
    report = selftest_report(tolerance=request.tolerance, seed=request.seed)
    return ReportResponse(report=report, exit_code=0 if report["pass"] else 2)


@app.get("/healthz")
def healthz():
    return {"status": "ok"}


@app.get("/version")
def version():
    return dict(TOOL)


@app.get("/schema")
def schema():
    return Scenario.model_json_schema()
