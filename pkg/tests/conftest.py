"""Shared fixtures for the abq test suite."""

import os

import pytest

# Cap FFT worker fan-out explicitly so results never depend on ambient
# environment configuration when the suite runs on larger machines.
os.environ.setdefault("ABQ_THREADS", "1")

from abq.spectral import Grid  # noqa: E402


@pytest.fixture(scope="session")
def grid16() -> Grid:
    return Grid(16, 16)


@pytest.fixture(scope="session")
def grid32() -> Grid:
    return Grid(32, 32)


@pytest.fixture(scope="session")
def grid64() -> Grid:
    return Grid(64, 64)
