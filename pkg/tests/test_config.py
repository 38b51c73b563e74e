import pytest
import yaml

from datascout.config import (
    EngineConfig,
    MetadataFieldSpec,
    load_config,
    validate_custom_metadata,
)
from datascout.errors import ConfigError, MetadataSchemaViolation


def write_config(tmp_path, doc):
    path = tmp_path / "engine.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def test_defaults_and_relative_paths(tmp_path):
    path = write_config(
        tmp_path,
        {
            "index_path": "idx",
            "cache": {"path": "cachedir", "max_bytes": 1024},
            "profiler": {"k_ranges": 4},
            "plugins": [{"name": "p", "type": "local", "path": "portal"}],
        },
    )
    config = load_config(path)
    assert config.index_path == str(tmp_path / "idx")
    assert config.cache_path == str(tmp_path / "cachedir")
    assert config.cache_max_bytes == 1024
    assert config.profiler.k_ranges == 4
    assert config.profiler.num_permutations == 128
    assert config.plugins[0].path == str(tmp_path / "portal")
    assert config.weights == {"keyword": 0.5, "filter": 0.2, "related": 0.3}


def test_env_overrides(tmp_path, monkeypatch):
    path = write_config(tmp_path, {"index_path": "idx", "listen_address": "0.0.0.0:1"})
    monkeypatch.setenv("ENGINE_INDEX_PATH", str(tmp_path / "other"))
    monkeypatch.setenv("ENGINE_LISTEN_ADDRESS", "127.0.0.1:9999")
    config = load_config(path)
    assert config.index_path == str(tmp_path / "other")
    assert config.listen_address == "127.0.0.1:9999"
    assert config.listen_port == 9999


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_bad_plugin_type_rejected(tmp_path):
    path = write_config(tmp_path, {"plugins": [{"name": "x", "type": "ftp"}]})
    with pytest.raises(ConfigError):
        load_config(path)


def test_negative_weight_rejected(tmp_path):
    path = write_config(tmp_path, {"ranking": {"keyword": -1}})
    with pytest.raises(ConfigError):
        load_config(path)


def test_duplicate_metadata_field_rejected(tmp_path):
    path = write_config(
        tmp_path,
        {"custom_metadata_fields": [{"name": "a"}, {"name": "a"}]},
    )
    with pytest.raises(ConfigError):
        load_config(path)


def test_enum_without_values_rejected(tmp_path):
    path = write_config(
        tmp_path, {"custom_metadata_fields": [{"name": "a", "type": "enum"}]}
    )
    with pytest.raises(ConfigError):
        load_config(path)


class TestMetadataValidation:
    FIELDS = [
        MetadataFieldSpec("department", "string", required=True),
        MetadataFieldSpec("grid_size", "number"),
        MetadataFieldSpec("license", "enum", enum_values=["mit", "cc0"]),
    ]

    def test_valid(self):
        validate_custom_metadata(
            self.FIELDS, {"department": "dot", "grid_size": "0.5", "license": "mit"}
        )

    def test_missing_required(self):
        with pytest.raises(MetadataSchemaViolation):
            validate_custom_metadata(self.FIELDS, {})

    def test_unknown_key(self):
        with pytest.raises(MetadataSchemaViolation):
            validate_custom_metadata(self.FIELDS, {"department": "x", "bogus": "y"})

    def test_bad_number(self):
        with pytest.raises(MetadataSchemaViolation):
            validate_custom_metadata(
                self.FIELDS, {"department": "x", "grid_size": "huge"}
            )

    def test_bad_enum(self):
        with pytest.raises(MetadataSchemaViolation):
            validate_custom_metadata(
                self.FIELDS, {"department": "x", "license": "gpl"}
            )
