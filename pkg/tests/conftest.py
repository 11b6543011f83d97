import pytest

from lnr.config import AppConfig
from lnr.runtime import RobotRuntime


@pytest.fixture
def app_config() -> AppConfig:
    return AppConfig()


@pytest.fixture
def runtime(app_config) -> RobotRuntime:
    return RobotRuntime(app_config)


@pytest.fixture
def traced_runtime(app_config) -> RobotRuntime:
    return RobotRuntime(app_config, trace=True)
