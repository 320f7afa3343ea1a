"""
JSON documents and CSV interchange for specifications, paths, increments and fits
All artifacts are written to a temporary file and renamed into place
"""

import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .carma_model import CarmaSpec
from .errors import CarmaLevyError, DataError, SpecError
from .estimator import SUMMARY_TITLE, FitResult
from .levy import IncrementSeries, LevyFamily, LevyModel, NoiseFit
from .simulator import SimulatedPath
from .timeseries import TimeSeries

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if value is not None and np.isfinite(value) else None


class NoiseDocument(BaseModel):
    """Noise sub-document: {"family": ..., "params": {...}}"""

    family: str
    params: Dict[str, float]

    @field_validator("family")
    @classmethod
    def _known_family(cls, value: str) -> str:
        return LevyFamily.parse(value).value

    def to_model(self) -> LevyModel:
        return LevyModel(LevyFamily.parse(self.family), dict(self.params))

    @classmethod
    def from_model(cls, model: LevyModel) -> "NoiseDocument":
        return cls(family=model.family.value, params=dict(model.params))


class SpecDocument(BaseModel):
    """CARMA specification document; sigma and c0 default to 1 and 0"""

    p: int
    q: int
    a: List[float]
    b: List[float]
    sigma: float = 1.0
    c0: float = 0.0
    noise: Optional[NoiseDocument] = None

    def to_spec(self) -> CarmaSpec:
        return CarmaSpec(
            p=self.p,
            q=self.q,
            a=self.a,
            b=self.b,
            sigma=self.sigma,
            c0=self.c0,
            noise=self.noise.to_model() if self.noise is not None else None,
        )

    @classmethod
    def from_spec(cls, spec: CarmaSpec) -> "SpecDocument":
        data = spec.to_dict()
        noise = data.pop("noise", None)
        return cls(**data, noise=NoiseDocument(**noise) if noise is not None else None)


class CoefficientRow(BaseModel):
    name: str
    estimate: float
    stderr: Optional[float] = None


class IncrementSummary(BaseModel):
    count: int
    mean: float
    sd: float
    min: float
    q1: float
    median: float
    q3: float
    max: float
    burn_in: int = 0
    h: float


class NoiseFitDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = SCHEMA_VERSION
    family: str
    coefficients: List[CoefficientRow]
    loglik: float
    minus_two_loglik: float = Field(alias="-2logL")
    n: int
    h: float
    converged: bool
    at_boundary: List[str] = Field(default_factory=list)
    n_atoms: int = 0

    @classmethod
    def from_fit(cls, fit: NoiseFit) -> "NoiseFitDocument":
        return cls(
            family=fit.model.family.value,
            coefficients=[
                CoefficientRow(name=name, estimate=value, stderr=_finite_or_none(fit.stderr.get(name)))
                for name, value in fit.params.items()
            ],
            loglik=fit.loglik,
            minus_two_loglik=fit.minus_two_loglik,
            n=fit.n,
            h=fit.h,
            converged=fit.converged,
            at_boundary=list(fit.at_boundary),
            n_atoms=fit.n_atoms,
        )


class FitResultDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = SCHEMA_VERSION
    title: str
    spec: SpecDocument
    coefficients: List[CoefficientRow]
    loglik: float
    minus_two_loglik: float = Field(alias="-2logL")
    stationary: bool
    recovery_mode: str
    normalization: str
    increments: Optional[IncrementSummary] = None
    increments_path: Optional[str] = None
    noise_fit: Optional[NoiseFitDocument] = None
    warnings: List[str] = Field(default_factory=list)

    @classmethod
    def from_result(cls, result: FitResult, increments_path: Optional[PathLike] = None) -> "FitResultDocument":
        increments = None
        if result.increments is not None:
            increments = IncrementSummary(
                **result.increments.summary(),
                burn_in=result.increments.burn_in,
                h=result.increments.h,
            )
        return cls(
            title=SUMMARY_TITLE,
            spec=SpecDocument.from_spec(result.spec_hat),
            coefficients=[
                CoefficientRow(name=name, estimate=value, stderr=_finite_or_none(se))
                for name, value, se in result.coefficient_table()
            ],
            loglik=result.loglik,
            minus_two_loglik=result.minus_two_loglik,
            stationary=result.stationary,
            recovery_mode=result.recovery_mode.value,
            normalization=result.normalization.value,
            increments=increments,
            increments_path=str(increments_path) if increments_path is not None else None,
            noise_fit=NoiseFitDocument.from_fit(result.noise_fit) if result.noise_fit is not None else None,
            warnings=list(result.warnings),
        )


class SimulationEchoDocument(BaseModel):
    schema_version: str = SCHEMA_VERSION
    spec: SpecDocument
    noise: NoiseDocument
    terminal: float
    n: int
    h: float
    seed: Optional[int]
    method: str
    burn_in: int = 0


class ErrorDocument(BaseModel):
    schema_version: str = SCHEMA_VERSION
    error: str
    message: str
    exit_code: int
    details: Dict[str, Any] = Field(default_factory=dict)


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write text to a temporary sibling file, then rename it over path"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temp_name, target)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    logger.info("Wrote %s", target)
    return target


def document_json(document: BaseModel) -> str:
    """Serialize a document with aliases; non-finite floats become null"""
    return document.model_dump_json(by_alias=True, indent=2) + "\n"


def write_document(path: PathLike, document: BaseModel) -> Path:
    return atomic_write_text(path, document_json(document))


def read_spec(path: PathLike) -> CarmaSpec:
    """
    Read a specification JSON document

    Raises:
        SpecError: On unreadable JSON or invalid fields
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return SpecDocument.model_validate(raw).to_spec()
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise SpecError(f"cannot read specification {path}: {e}") from e
    except CarmaLevyError as e:
        raise SpecError(f"invalid specification {path}: {e.message}", **e.details) from e


def _frame_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def path_csv(path: SimulatedPath, include_states: bool = True) -> str:
    """CSV text with columns t, y and optionally x0..x{p-1}"""
    frame = pd.DataFrame({"t": path.times(), "y": path.y})
    if include_states:
        for j in range(path.x.shape[1]):
            frame[f"x{j}"] = path.x[:, j]
    return _frame_csv(frame)


def increments_csv(increments: IncrementSeries) -> str:
    """CSV text with columns t (end of each step) and dL"""
    return _frame_csv(pd.DataFrame({"t": increments.times(), "dL": increments.values}))


def write_path_csv(target: PathLike, path: SimulatedPath, include_states: bool = True) -> Path:
    return atomic_write_text(target, path_csv(path, include_states))


def write_increments_csv(target: PathLike, increments: IncrementSeries) -> Path:
    return atomic_write_text(target, increments_csv(increments))


def _read_frame(path: PathLike, columns: List[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"cannot read CSV {path}: {e}") from e
    missing = [col for col in columns if col not in frame.columns]
    if missing:
        raise DataError(f"CSV {path} lacks columns: {', '.join(missing)}", missing=missing)
    try:
        return frame[columns].astype(float)
    except ValueError as e:
        raise DataError(f"CSV {path} has non-numeric values: {e}") from e


def read_series_csv(path: PathLike) -> TimeSeries:
    """
    Read observations with columns t, y

    Raises:
        DataError: If the file is malformed or irregularly spaced
    """
    frame = _read_frame(path, ["t", "y"])
    return TimeSeries.from_times(frame["t"].to_numpy(), frame["y"].to_numpy())


def read_increments_csv(path: PathLike) -> IncrementSeries:
    """
    Read increments with columns t, dL (t the end time of each step)

    Raises:
        DataError: If the file is malformed or irregularly spaced
    """
    frame = _read_frame(path, ["t", "dL"])
    t = frame["t"].to_numpy()
    values = frame["dL"].to_numpy()
    if t.size < 2:
        raise DataError("increment CSV needs at least two rows")
    grid = TimeSeries.from_times(t, values)
    return IncrementSeries(h=grid.h, values=values, t0=grid.t0 - grid.h)


__all__ = [
    'SCHEMA_VERSION',
    'NoiseDocument',
    'SpecDocument',
    'CoefficientRow',
    'IncrementSummary',
    'NoiseFitDocument',
    'FitResultDocument',
    'SimulationEchoDocument',
    'ErrorDocument',
    'atomic_write_text',
    'document_json',
    'write_document',
    'read_spec',
    'path_csv',
    'increments_csv',
    'write_path_csv',
    'write_increments_csv',
    'read_series_csv',
    'read_increments_csv',
]
