import pytest
import yaml

from src.config import Config, PROJECT_ROOT, config


class TestConfig:

    def test_loads_project_defaults(self):
        assert config.default_bins == 20
        assert config.gan_hidden == (128, 128)
        assert config.pate_vote_noise_scale is None

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="not found"):
            Config(str(tmp_path / "absent.yaml"))

    def test_missing_key(self, tmp_path):
        with open(f"{PROJECT_ROOT}/config.yaml", encoding="utf-8") as f:
            data = yaml.safe_load(f)
        del data["default_bins"]
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump(data), encoding="utf-8")
        with pytest.raises(KeyError, match="default_bins"):
            Config(str(path))

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("default_bins: [1, 2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="Invalid YAML"):
            Config(str(path))

    def test_output_directory_env_override(self, monkeypatch):
        monkeypatch.setenv("DPSYNTH_OUTPUT_DIR", "/tmp/dpsynth-out")
        assert Config().output_directory == "/tmp/dpsynth-out"

    def test_config_path_env_override(self, tmp_path, monkeypatch):
        with open(f"{PROJECT_ROOT}/config.yaml", encoding="utf-8") as f:
            data = yaml.safe_load(f)
        data["default_bins"] = 7
        path = tmp_path / "alt.yaml"
        path.write_text(yaml.safe_dump(data), encoding="utf-8")
        monkeypatch.setenv("DPSYNTH_CONFIG", str(path))
        assert Config().default_bins == 7
