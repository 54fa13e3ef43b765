from __future__ import annotations

import pytest

from stegopolicy import ChainParams


@pytest.fixture
def attracted() -> ChainParams:
    """Both transition masses >= 1/2; the standard showcase instance."""
    return ChainParams(p0=0.7, p1=0.9, init0=0.8, gamma=0.9)


@pytest.fixture
def oscillatory() -> ChainParams:
    return ChainParams(p0=0.2, p1=0.9, init0=0.8, gamma=0.9)


@pytest.fixture
def sticky() -> ChainParams:
    return ChainParams(p0=0.8, p1=0.3, init0=0.8, gamma=0.9)
