import numpy as np
import pytest

from fractalips import SelfSimilarMeasure, preset


@pytest.fixture(scope="session")
def sg():
    return preset("sg")


@pytest.fixture(scope="session")
def sg_measure(sg):
    return SelfSimilarMeasure.uniform(sg)


@pytest.fixture(scope="session")
def interval2():
    return preset("interval-2")


@pytest.fixture(scope="session")
def interval2_measure(interval2):
    return SelfSimilarMeasure.uniform(interval2)


@pytest.fixture(scope="session")
def sg_vertices():
    return (
        np.array([0.0, 0.0]),
        np.array([0.5, np.sqrt(3.0) / 2.0]),
        np.array([1.0, 0.0]),
    )
