from __future__ import annotations

import pytest

from bcplus.config import Config, load_config


def test_defaults():
    cfg = load_config()
    assert cfg.query.max_horizon == 30 and cfg.pipeline.sat_budget == 10
    assert cfg.query.solver is cfg.solver


def test_types_are_coerced(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text(
        "[solver]\nbackend = builtin\n\n[query]\nmax_horizon = 12\n\n"
        "[bench]\nrun_oracle = no\nworkers = 2\n\n[client]\ntemperature = 0.5\n\n"
        "[pipeline]\ntranscript_dir = none\n"
    )
    cfg = load_config(ini)
    assert cfg.solver.backend == "builtin" and cfg.query.solver.backend == "builtin"
    assert cfg.query.max_horizon == 12
    assert cfg.bench.run_oracle is False and cfg.bench.workers == 2
    assert cfg.client.temperature == 0.5
    assert cfg.pipeline.transcript_dir is None


@pytest.mark.parametrize("body", ["[nosuch]\na = 1\n", "[query]\nnosuch = 1\n"])
def test_unknown_names_raise(tmp_path, body):
    ini = tmp_path / "c.ini"
    ini.write_text(body)
    with pytest.raises(ValueError):
        load_config(ini)


def test_bad_number_raises(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[query]\nmax_horizon = lots\n")
    with pytest.raises(ValueError):
        load_config(ini)


def test_config_instances_are_independent():
    a, b = Config(), Config()
    a.query.max_horizon = 3
    assert b.query.max_horizon == 30
