"""Shared fixtures: reference boundaries and a boundary-file writer."""

import json

import pytest

from slepian_ncp import PiecewiseLinearBoundary


@pytest.fixture
def tent():
    """Two-segment tent boundary used across integrator tests."""
    return PiecewiseLinearBoundary(((0.0, 0.5), (0.5, 1.5), (1.0, 0.5)))


@pytest.fixture
def three_seg():
    """Three-segment asymmetric boundary."""
    return PiecewiseLinearBoundary(((0.0, 1.0), (0.3, 0.4), (0.7, 1.2), (1.0, 0.8)))


@pytest.fixture
def write_boundary(tmp_path):
    """Write a boundary JSON object to a temp file, return its path."""

    def _write(obj, name="boundary.json"):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)

    return _write
