"""Shared fixtures for the test suite; builders live in helpers.py."""

from __future__ import annotations

import pytest


@pytest.fixture()
def abc_terms() -> tuple[str, ...]:
    return ("a", "b", "c")
