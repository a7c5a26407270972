"""FastAPI service exposing the solver's four operations.

The CLI is a thin client of these endpoints (in-process by default);
every run is stateless and returns its CSV artifacts in the response, so
the service never touches the filesystem.  Invalid configs and example
names map to 422, solver failures to 500 with the error text.
"""

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..problems import (
    EXAMPLE_NAMES,
    config_from_toml,
    emit_contour_dump,
    emit_region_curves,
    run_config,
    run_example,
    _example1_config,
)
from .schemas import (
    ContourDumpRequest,
    CurvesRequest,
    ExampleRequest,
    HealthResponse,
    RunResponse,
    SolveRequest,
)

app = FastAPI(title="fraclap", version=__version__)


def _run(operation, *args, **kwargs):
    try:
        result = operation(*args, **kwargs)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    except Exception as exc:  # solver failures: report, don't crash
        raise HTTPException(status_code=500,
                            detail=f"{type(exc).__name__}: {exc}")
    return RunResponse.from_result(result)


@app.get(path="/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", version=__version__)


@app.post(path="/solve", response_model=RunResponse)
def solve(request: SolveRequest):
    try:
        config = config_from_toml(request.config_toml)
    except Exception as exc:
        raise HTTPException(status_code=422, detail=f"bad config: {exc}")
    return _run(run_config, config, threads=request.threads)


@app.post(path="/example", response_model=RunResponse)
def example(request: ExampleRequest):
    if request.name not in EXAMPLE_NAMES:
        raise HTTPException(
            status_code=422,
            detail=f"unknown example {request.name!r}; "
                   f"expected one of {list(EXAMPLE_NAMES)}",
        )
    return _run(run_example, request.name, nu=request.nu,
                omega=request.omega, accuracy=request.accuracy,
                contour=request.contour, N=request.N, t0=request.t0,
                t1=request.t1, b=request.b, delta=request.delta,
                threads=request.threads)


@app.post(path="/curves", response_model=RunResponse)
def curves(request: CurvesRequest):
    return _run(emit_region_curves, nu=request.nu, M=request.M,
                n_theta=request.n_theta)


@app.post(path="/contour-dump", response_model=RunResponse)
def contour_dump(request: ContourDumpRequest):
    if request.config_toml is None:
        config = _example1_config()
    else:
        try:
            config = config_from_toml(request.config_toml)
        except Exception as exc:
            raise HTTPException(status_code=422, detail=f"bad config: {exc}")
    return _run(emit_contour_dump, config, threads=request.threads)
