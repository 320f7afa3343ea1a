"""
Shared fixtures: reference specifications, Levy laws, random stable models and settings
"""

import json
from pathlib import Path
from typing import Callable, List

import numpy as np
import pytest

from config.settings import CarmaLevyConfig
from src.carma_model import CarmaSpec
from src.levy import LevyModel

SETTINGS_ENV = [
    "CARMA_LEVY_OUTPUT_DIR",
    "CARMA_LEVY_LOG_LEVEL",
    "CARMA_LEVY_LOG_FILE",
    "CARMA_LEVY_THREADS",
    "CARMA_LEVY_FOURIER_UMAX",
    "CARMA_LEVY_FOURIER_POINTS",
    "CARMA_LEVY_ATOM_EPS",
    "CARMA_LEVY_MAXITER_PER_DIM",
]


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Settings overrides from the developer shell must not leak into tests"""
    for name in SETTINGS_ENV:
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def settings(tmp_path) -> CarmaLevyConfig:
    return CarmaLevyConfig(output_dir=tmp_path / "output")


@pytest.fixture
def carma31() -> CarmaSpec:
    """CARMA(3,1) with eigenvalues -0.5, -1.5, -2"""
    return CarmaSpec(p=3, q=1, a=[4.0, 4.75, 1.5], b=[1.0, 0.23])


@pytest.fixture
def carma21() -> CarmaSpec:
    return CarmaSpec(p=2, q=1, a=[1.39631, 0.05029], b=[1.0, 1.0])


@pytest.fixture
def car1() -> CarmaSpec:
    return CarmaSpec(p=1, q=0, a=[0.8], b=[1.0], sigma=1.3)


@pytest.fixture
def brownian() -> LevyModel:
    return LevyModel.create("Brownian", mu=0.0, sigma=1.0)


@pytest.fixture
def stable_specs() -> Callable[[int], List[CarmaSpec]]:
    """Random stationary CARMA(2,1)/(3,1) specifications with well separated real eigenvalues"""

    def build(count: int = 10, seed: int = 11) -> List[CarmaSpec]:
        rng = np.random.default_rng(seed)
        specs = []
        for i in range(count):
            p = 2 if i % 2 == 0 else 3
            roots = -np.sort(rng.uniform(0.3, 3.0, size=p))
            while np.min(np.abs(np.diff(roots))) < 0.2:
                roots = -np.sort(rng.uniform(0.3, 3.0, size=p))
            a = np.real(np.poly(roots))[1:]
            b = [1.0, float(rng.uniform(0.1, 1.5))]
            specs.append(CarmaSpec(p=p, q=1, a=a, b=b, sigma=float(rng.uniform(0.5, 2.0))))
        return specs

    return build


@pytest.fixture
def spec_file(tmp_path) -> Callable[..., Path]:
    """Write a specification document and return its path"""

    def write(document: dict, name: str = "spec.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return write
