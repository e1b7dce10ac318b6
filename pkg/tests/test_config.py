# tests/test_config.py
import pytest

from app.config import Settings, get_settings
from app.utils.errors import ConfigError, DeskScaleExceeded, PrecisionExhausted, to_http


def test_env_overrides(monkeypatch):
    monkeypatch.setenv("ENDRING_SEED", "17")
    monkeypatch.setenv("ENDRING_TORSION_LEVELS", "5,7,11")
    s = get_settings()
    assert s.seed == 17
    assert s.torsion_levels == (5, 7, 11)
    assert get_settings(seed=3).seed == 3


def test_bad_env_value(monkeypatch):
    monkeypatch.setenv("ENDRING_THREADS", "muchos")
    with pytest.raises(ConfigError):
        get_settings()


def test_validation():
    with pytest.raises(ConfigError):
        Settings().with_overrides(ell=1)
    with pytest.raises(ConfigError):
        Settings().with_overrides(theta_d=300)
    with pytest.raises(ConfigError):
        Settings().with_overrides(max_ext_degree=20)
    # None no pisa el valor
    assert Settings(seed=5).with_overrides(seed=None).seed == 5


def test_error_mapping():
    assert issubclass(PrecisionExhausted, DeskScaleExceeded)
    assert PrecisionExhausted.exit_code == 3
    exc = to_http(ConfigError("malo"))
    assert exc.status_code == 422
    assert "ConfigError" in exc.detail
