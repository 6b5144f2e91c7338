import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, 'python'))

from corrlab.linalg import Tolerances  # noqa: E402

A = 1.0 / np.sqrt(2.0)
R2 = np.sqrt(2.0)


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: large randomized suites')


@pytest.fixture
def tol():
    return Tolerances()


@pytest.fixture
def chsh():
    return A * np.array([[1.0, 1.0], [1.0, -1.0]])


@pytest.fixture
def chsh_hat():
    '''unique completion of the CHSH correlator'''
    return np.array([[1, 0, A, A],
                     [0, 1, A, -A],
                     [A, A, 1, 0],
                     [A, -A, 0, 1]])


@pytest.fixture
def chsh_dual():
    v1 = np.array([A, A, -1, 0])
    v2 = np.array([A, -A, 0, -1])
    return np.outer(v1, v1) + np.outer(v2, v2)


@pytest.fixture
def my():
    return np.array([[1, 0, A], [0, 1, A], [A, A, 1]])


@pytest.fixture
def my_hat():
    row = [[1, 0, A], [0, 1, A], [A, A, 1]]
    return np.block([[np.array(row), np.array(row)], [np.array(row), np.array(row)]])


@pytest.fixture
def my_null():
    return np.array([[-1, -1, -1, 1, 1, 1],
                     [-1, 1, 0, 1, -1, 0],
                     [1, 1, -R2, 1, 1, -R2],
                     [1, 1, -1, -1, -1, 1]], dtype=float)


@pytest.fixture
def my_dual(my_null):
    w = [2 * R2, 3 * R2 + 1, 1.0, R2]
    return sum(wi * np.outer(v, v) for wi, v in zip(w, my_null))


@pytest.fixture
def my_functional():
    '''exposing functional of the Mayers-Yao point, oriented so that L.c <= 6(5 sqrt2 + 2)'''
    return np.array([[12 * R2, -4, 4 * R2],
                     [-4, 12 * R2, 4 * R2],
                     [4 * R2, 4 * R2, 2 * (3 * R2 - 2)]])


@pytest.fixture
def tilted():
    return 0.5 * np.array([[1.0, 1.0], [1.0, -2.0]])


@pytest.fixture
def tilted_hat():
    return np.array([[1, -0.5, 0.5, 0.5],
                     [-0.5, 1, 0.5, -1],
                     [0.5, 0.5, 1, -0.5],
                     [0.5, -1, -0.5, 1]])
