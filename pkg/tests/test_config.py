"""配置管理器测试"""

import json
import os

import pytest

from config import Gaze3DConfigManager
from config.gaze3d_config_manager import DEFAULT_CONFIG_PATH

EXAMPLE = DEFAULT_CONFIG_PATH + '.example'


def _write(tmp_path, document):
    path = tmp_path / 'gaze3d_config.json'
    path.write_text(json.dumps(document), encoding='utf-8')
    return str(path)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv('GAZE3D_LOG_LEVEL', raising=False)
    monkeypatch.delenv('GAZE3D_WORKERS', raising=False)


def test_example_parses():
    config = Gaze3DConfigManager(EXAMPLE)
    assert config.get_workers() == 4
    assert config.get_pnp_config().workers == 4
    assert config.get_simulation_seed() == 7
    assert config.get_database_name() == 'gaze3d'


def test_defaults_for_empty_file(tmp_path):
    config = Gaze3DConfigManager(_write(tmp_path, {}))
    assert config.get_log_level() == 'INFO'
    assert config.get_workers() == 1
    pnp = config.get_pnp_config()
    assert (pnp.ransac_iterations, pnp.inlier_threshold_px, pnp.min_inliers) == (200, 2.0, 10)
    assert config.get_grid_params()['l_occ'] == 0.85
    assert config.get_roi_params()['merge_radius_m'] == 0.15
    assert config.get_analytics_params()['dispersion_threshold_deg'] == 2.5
    assert config.get_simulation_seed() is None
    assert config.get_mongodb_uri() == 'mongodb://localhost:27017/'


def test_missing_explicit_path(tmp_path):
    with pytest.raises(FileNotFoundError, match='example'):
        Gaze3DConfigManager(str(tmp_path / 'missing.json'))


def test_environment_overrides(tmp_path, monkeypatch):
    path = _write(tmp_path, {'settings': {'log_level': 'debug', 'workers': 2}})
    config = Gaze3DConfigManager(path)
    assert config.get_log_level() == 'DEBUG'
    assert config.get_workers() == 2

    monkeypatch.setenv('GAZE3D_LOG_LEVEL', 'warning')
    monkeypatch.setenv('GAZE3D_WORKERS', '8')
    assert config.get_log_level() == 'WARNING'
    assert config.get_workers() == 8

    monkeypatch.setenv('GAZE3D_WORKERS', 'many')
    assert config.get_workers() == 2


def test_set_seed(tmp_path):
    config = Gaze3DConfigManager(_write(tmp_path, {'pnp': {'seed': 3}}))
    config.set_seed(42)
    assert config.get_pnp_config().seed == 42
    assert config.get_roi_params()['seed'] == 42
    assert config.get_simulation_seed() == 42


def test_invalid_pnp_values(tmp_path):
    config = Gaze3DConfigManager(_write(tmp_path, {'pnp': {'min_inliers': 2}}))
    with pytest.raises(ValueError):
        config.get_pnp_config()


def test_mongodb_uri_with_credentials(tmp_path):
    config = Gaze3DConfigManager(_write(tmp_path, {
        'mongodb': {'host': 'db', 'port': 27018, 'username': 'u', 'password': 'p', 'database': 'lab'},
    }))
    assert config.get_mongodb_uri() == 'mongodb://u:p@db:27018/?authSource=admin'
    assert config.get_database_name() == 'lab'


def test_example_is_next_to_default():
    assert os.path.exists(EXAMPLE)
