"""Pydantic request/response models for the solver service.

Artifacts travel as (name, text) pairs with a content hash so clients
can write byte-identical CSV files and verify them; the summary is the
run's resolved-parameter/certificate report.
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..csvio import content_hash


def _plain(value):
    """Recursively strip numpy scalar/array types for JSON transport."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {key: _plain(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class SolveRequest(BaseModel):
    config_toml: str = Field(description="Flat TOML problem config")
    threads: Optional[int] = None


class ExampleRequest(BaseModel):
    name: str
    nu: Optional[float] = None
    omega: Optional[float] = None
    accuracy: Optional[float] = None
    contour: Optional[str] = None
    N: Optional[int] = None
    t0: Optional[float] = None
    t1: Optional[float] = None
    b: Optional[str] = None
    delta: Optional[float] = None
    threads: Optional[int] = None


class CurvesRequest(BaseModel):
    nu: float
    M: float
    n_theta: int = 2000


class ContourDumpRequest(BaseModel):
    config_toml: Optional[str] = Field(
        default=None,
        description="Problem config; the stiff-beam example when omitted",
    )
    threads: Optional[int] = None


class ArtifactModel(BaseModel):
    name: str
    text: str
    content_hash: str

    @classmethod
    def from_artifact(cls, artifact):
        return cls(name=artifact.name, text=artifact.text,
                   content_hash=content_hash(artifact.text))


class RunResponse(BaseModel):
    ok: bool
    summary: dict
    artifacts: List[ArtifactModel]

    @classmethod
    def from_result(cls, result):
        return cls(ok=result.ok, summary=_plain(result.summary),
                   artifacts=[ArtifactModel.from_artifact(a)
                              for a in result.artifacts])


class HealthResponse(BaseModel):
    status: str
    version: str
