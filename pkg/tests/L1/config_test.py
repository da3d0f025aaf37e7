import pytest

from revdiam import config


def test_defaults(monkeypatch):
    for name in (config.ORACLE_CAP_ENV, config.VOLUME_MAX_GENERATORS_ENV, config.VOLUME_MAX_DIMENSION_ENV):
        monkeypatch.delenv(name, raising=False)
    assert config.oracle_arc_cap() == 20
    assert config.volume_max_generators() == 16
    assert config.volume_max_dimension() == 6


def test_overrides(monkeypatch):
    monkeypatch.setenv(config.ORACLE_CAP_ENV, '12')
    monkeypatch.setenv(config.VOLUME_MAX_DIMENSION_ENV, ' ')
    assert config.oracle_arc_cap() == 12
    assert config.volume_max_dimension() == 6


@pytest.mark.parametrize('raw', ['0', '-3', 'twelve'])
def test_invalid_values(monkeypatch, raw):
    monkeypatch.setenv(config.VOLUME_MAX_GENERATORS_ENV, raw)
    with pytest.raises(ValueError, match='set REVDIAM_VOLUME_MAX_GENERATORS environment variable'):
        config.volume_max_generators()
