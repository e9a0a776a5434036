from pathlib import Path

import pytest

from config import DB_NAME, RunConfig, load_config, parse_override
from errors import ConfigError


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig()
        assert config.seed == 42
        assert config.n_paths is None
        assert config.db_path == Path("runs") / DB_NAME

    @pytest.mark.parametrize(
        "kwargs",
        [{"seed": -1}, {"seed": 2**64}, {"n_paths": 0}, {"dt": 0.0}, {"parallelism": 0}],
    )
    def test_invalid_values(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_merged_skips_unset_flags(self):
        config = RunConfig(seed=5, n_paths=100).merged(seed=None, n_paths=200, dt=None)
        assert config.seed == 5
        assert config.n_paths == 200
        assert config.dt is None

    def test_merged_combines_overrides(self):
        config = RunConfig(overrides={"t": 1.0, "c": 2.0}).merged(overrides={"t": 3.0})
        assert config.overrides == {"t": 3.0, "c": 2.0}


class TestOverrides:
    def test_parse(self):
        assert parse_override("h5.b = 2.5") == ("h5.b", 2.5)

    @pytest.mark.parametrize("text", ["b", "=1", "b=high"])
    def test_malformed(self, text):
        with pytest.raises(ConfigError):
            parse_override(text)


class TestLoadConfig:
    def test_full_file(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text(
            "# nightly run\n"
            "seed = 7\n"
            "paths = 5000\n"
            "dt = 0.01\n"
            "parallelism = 4\n"
            "out = results\n"
            "suite = bm, stable\n"
            "param.h5.b = 2  # level\n"
        )
        config = load_config(path)
        assert config.seed == 7
        assert config.n_paths == 5000
        assert config.dt == 0.01
        assert config.parallelism == 4
        assert config.output_dir == Path("results")
        assert config.suite == ["bm", "stable"]
        assert config.overrides == {"h5.b": 2.0}

    @pytest.mark.parametrize("line", ["colour = red", "seed = many", "seed"])
    def test_bad_lines(self, tmp_path, line):
        path = tmp_path / "run.conf"
        path.write_text(line + "\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.conf")
