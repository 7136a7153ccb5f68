from __future__ import annotations

import logging

import pytest

from locsim.config import BASE_DIR, load_config
from locsim.errors import ConfigError, InputError
from locsim.parsing import parse_cut, parse_float_list, parse_int_list, parse_party, party_label
from locsim.tolerances import DEFAULT_TOLERANCES, Tolerances, load_tolerances

ENV = ("LOCSIM_TOLERANCES", "LOCSIM_SEED", "LOCSIM_FORMAT", "LOCSIM_LOG_LEVEL", "LOCSIM_WORKERS")


@pytest.fixture
def clean_env(monkeypatch):
    for name in ENV:
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


def test_defaults(clean_env):
    cfg = load_config()
    assert cfg.seed == 0
    assert cfg.report_format == "json"
    assert cfg.log_level == logging.WARNING
    assert cfg.workers == 1
    assert cfg.tolerances == DEFAULT_TOLERANCES


def test_environment_overrides(clean_env, tmp_path):
    table = tmp_path / "tol.yaml"
    table.write_text("decision: 1.0e-6\nverify: 1.0e-7\n")
    clean_env.setenv("LOCSIM_TOLERANCES", str(table))
    clean_env.setenv("LOCSIM_SEED", "42")
    clean_env.setenv("LOCSIM_FORMAT", "text")
    clean_env.setenv("LOCSIM_LOG_LEVEL", "debug")
    clean_env.setenv("LOCSIM_WORKERS", "4")
    cfg = load_config()
    assert cfg.seed == 42
    assert cfg.report_format == "text"
    assert cfg.log_level == logging.DEBUG
    assert cfg.workers == 4
    assert cfg.tolerances.decision == 1e-6
    assert cfg.tolerances.verify == 1e-7
    assert cfg.tolerances.norm == DEFAULT_TOLERANCES.norm


@pytest.mark.parametrize(
    "name, value",
    [
        ("LOCSIM_SEED", "abc"),
        ("LOCSIM_SEED", "-1"),
        ("LOCSIM_FORMAT", "xml"),
        ("LOCSIM_LOG_LEVEL", "LOUD"),
        ("LOCSIM_WORKERS", "0"),
    ],
)
def test_bad_environment(clean_env, name, value):
    clean_env.setenv(name, value)
    with pytest.raises(ConfigError):
        load_config()


@pytest.mark.parametrize("content", ["decison: 1.0e-6\n", "decision: -1\n", "decision: tiny\n", "- 1\n- 2\n"])
def test_bad_tolerance_tables(tmp_path, content):
    table = tmp_path / "tol.yaml"
    table.write_text(content)
    with pytest.raises(ConfigError):
        load_tolerances(table)


def test_missing_tolerance_table_is_an_error(clean_env, tmp_path):
    clean_env.setenv("LOCSIM_TOLERANCES", str(tmp_path / "missing.yaml"))
    with pytest.raises(ConfigError, match="does not exist"):
        load_config()
    with pytest.raises(ConfigError):
        load_tolerances(tmp_path / "missing.yaml")


def test_relative_tolerance_path_is_taken_from_the_repository_root(clean_env, tmp_path):
    clean_env.chdir(tmp_path)
    clean_env.setenv("LOCSIM_TOLERANCES", "data/tolerances.yaml")
    cfg = load_config()
    assert cfg.tolerances_path == BASE_DIR / "data" / "tolerances.yaml"
    assert cfg.tolerances == DEFAULT_TOLERANCES


def test_shipped_table_matches_defaults():
    assert load_tolerances() == Tolerances()


def test_with_decision():
    assert DEFAULT_TOLERANCES.with_decision(None) is DEFAULT_TOLERANCES
    assert DEFAULT_TOLERANCES.with_decision(1e-4).decision == 1e-4
    with pytest.raises(ConfigError):
        DEFAULT_TOLERANCES.with_decision(0.0)


def test_config_error_is_an_input_error():
    assert issubclass(ConfigError, InputError)


def test_parse_lists():
    assert parse_int_list("2,3") == [2, 3]
    assert parse_int_list("[2, 3 4]") == [2, 3, 4]
    assert parse_int_list(None) == []
    assert parse_float_list("0.8, 0.6") == [0.8, 0.6]
    with pytest.raises(InputError):
        parse_int_list("2,x")


@pytest.mark.parametrize("value, index", [("A", 0), ("b", 1), ("C", 2), ("2", 2), (" 0 ", 0)])
def test_parse_party(value, index):
    assert parse_party(value, 3) == index


@pytest.mark.parametrize("value", ["D", "-1", "3", "AB"])
def test_parse_party_rejects(value):
    with pytest.raises(InputError):
        parse_party(value, 3)


def test_parse_cut():
    assert parse_cut("0|1,2") == ([0], [1, 2])
    assert parse_cut("0,2|") == ([0, 2], [])
    with pytest.raises(InputError):
        parse_cut("0,1")
    assert party_label(1) == "B"
