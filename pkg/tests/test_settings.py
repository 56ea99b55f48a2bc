import os

import pytest

from radiallf.errors import ConfigError
from radiallf.settings import (
    CONFIG_ENV,
    load_environment,
    load_settings,
    merge,
    parse_settings,
    solver_overrides,
)


def test_parse():
    settings = parse_settings("eps_grad: 1.0e-8\ninit: flat\n")
    assert settings == {"eps_grad": 1e-8, "init": "flat"}


def test_empty_document():
    assert parse_settings("") == {}


@pytest.mark.parametrize("text", ["- a\n- b\n", "tolerance: 1\n", "eps_grad: [1\n"])
def test_rejected(text):
    with pytest.raises(ConfigError):
        parse_settings(text)


def test_flags_win():
    merged = merge({"init": "flat", "max_iter": 50}, {"init": "warm", "max_iter": None})
    assert merged == {"init": "warm", "max_iter": 50}


def test_solver_overrides_skip_run_keys():
    assert solver_overrides({"init": "flat", "beta": 0.5, "sigma": None}) == {"beta": 0.5}


def test_load_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "lf.yaml"
    path.write_text("max_iter: 7\n")
    monkeypatch.setenv(CONFIG_ENV, str(path))
    assert load_settings() == {"max_iter": 7}


def test_no_file(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)
    assert load_settings() == {}


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_settings(str(tmp_path / "absent.yaml"))


def test_dotenv_does_not_override(tmp_path, monkeypatch):
    env = tmp_path / ".env"
    env.write_text("RADIALLF_CASES=/from/file\nRADIALLF_TEST_ONLY=loaded\n")
    monkeypatch.setenv("RADIALLF_CASES", "/from/shell")
    monkeypatch.delenv("RADIALLF_TEST_ONLY", raising=False)
    load_environment(str(env))
    assert os.environ["RADIALLF_CASES"] == "/from/shell"
    assert os.environ.pop("RADIALLF_TEST_ONLY") == "loaded"
