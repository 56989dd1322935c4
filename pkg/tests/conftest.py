"""Shared fixtures: the small worked instance used across the test suite."""

import pytest

from icnlab.game.symmetric import build_config, solve_equilibrium


@pytest.fixture
def worked_config():
    """M=2, gamma=1, c0=1, R=0.7, cO=2, K=2, rho=rho0=0.1."""
    return build_config(m=2, gamma=1.0, r=0.7, co=2.0)


@pytest.fixture
def worked_equilibrium(worked_config):
    return solve_equilibrium(worked_config)


@pytest.fixture
def isolated_audit(tmp_path):
    """Path for a throwaway audit ledger."""
    return str(tmp_path / "logs" / "audit.jsonl")
