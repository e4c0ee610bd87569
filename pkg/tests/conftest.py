from __future__ import annotations

import numpy as np
import pytest

from src.bergman_geometry.domains import DomainDescriptor
from src.bergman_geometry.kernels import KernelModel


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


@pytest.fixture(scope="session")
def disk() -> KernelModel:
    return KernelModel(DomainDescriptor.disk())


@pytest.fixture(scope="session")
def ball2() -> KernelModel:
    return KernelModel(DomainDescriptor.ball(2))


@pytest.fixture(scope="session")
def annulus() -> KernelModel:
    return KernelModel(DomainDescriptor.annulus(0.3))


@pytest.fixture(scope="session")
def product() -> KernelModel:
    return KernelModel(DomainDescriptor.product(DomainDescriptor.annulus(0.3), DomainDescriptor.disk()))


@pytest.fixture(scope="session")
def catalog(disk: KernelModel, ball2: KernelModel, annulus: KernelModel, product: KernelModel) -> list:
    return [disk, ball2, KernelModel(DomainDescriptor.polydisc(2)), annulus, product]
