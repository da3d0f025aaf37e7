import logging
import os

logger = logging.getLogger('revdiam.config')

ORACLE_CAP_ENV = 'REVDIAM_ORACLE_CAP'
VOLUME_MAX_GENERATORS_ENV = 'REVDIAM_VOLUME_MAX_GENERATORS'
VOLUME_MAX_DIMENSION_ENV = 'REVDIAM_VOLUME_MAX_DIMENSION'

DEFAULT_ORACLE_CAP = 20
DEFAULT_VOLUME_MAX_GENERATORS = 16
DEFAULT_VOLUME_MAX_DIMENSION = 6


def _positive_int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"invalid value {raw!r}, set {name} environment variable to a positive integer!") from None
    if value <= 0:
        raise ValueError(f"invalid value {value}, set {name} environment variable to a positive integer!")
    logger.info(f"Using {name}={value}")
    return value


def oracle_arc_cap() -> int:
    return _positive_int_from_env(ORACLE_CAP_ENV, DEFAULT_ORACLE_CAP)


def volume_max_generators() -> int:
    return _positive_int_from_env(VOLUME_MAX_GENERATORS_ENV, DEFAULT_VOLUME_MAX_GENERATORS)


def volume_max_dimension() -> int:
    return _positive_int_from_env(VOLUME_MAX_DIMENSION_ENV, DEFAULT_VOLUME_MAX_DIMENSION)
