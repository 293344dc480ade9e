"""Fixtures over the shared test doubles in stubs.py."""

import pytest

from speechlens_server.config import ServerConfig

from stubs import COMPOSITE_HEADS, COMPOSITE_LABELS, GROUPED_LABELS


@pytest.fixture
def composite_config():
    return ServerConfig("stub", 16000, COMPOSITE_HEADS, COMPOSITE_LABELS)


@pytest.fixture
def grouped_config():
    return ServerConfig("stub", 16000, COMPOSITE_HEADS, GROUPED_LABELS)
