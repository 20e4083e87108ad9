"""Shared fixtures for the trainer suite."""

import pytest

from corpusutil import write_corpus


@pytest.fixture
def tiny_corpus(tmp_path):
    """Three 16x16 HR pairs at scale 4, three channels."""
    return write_corpus(tmp_path / "corpus", count=3)
