import pytest

from spanoid_lab.settings import reset_settings


@pytest.fixture(autouse=True)
def fresh_settings():
    """Every test starts from default settings and leaves no overrides behind"""
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def pentagon_file(tmp_path):
    path = tmp_path / "pentagon.spanoid"
    path.write_text("n 5\nrule 1 2 -> 4\nrule 2 3 -> 5\nrule 3 4 -> 1\nrule 4 5 -> 2\nrule 5 1 -> 3\n")
    return path
