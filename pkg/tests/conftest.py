import json
import socket
from pathlib import Path

import pytest

from monoslice.config import load_config
from monoslice.parser import parse_source
from monoslice.semantics import resolve
from monoslice.values import decode_json

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "monoslice" / "fixtures"


@pytest.fixture(scope="session")
def fixture_source() -> str:
    return (FIXTURES / "smart-city.ol").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def fixture_program(fixture_source):
    return parse_source(fixture_source, source_name="smart-city")


@pytest.fixture(scope="session")
def fixture_checked(fixture_program):
    return resolve(fixture_program)


@pytest.fixture(scope="session")
def local_config():
    return load_config(FIXTURES / "local.json")


@pytest.fixture(scope="session")
def deploy_config_path() -> Path:
    return FIXTURES / "deploy.json"


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def loopback_config(service_names, ports=None):
    """A socket:// config on 127.0.0.1 with fresh ports for each service."""
    ports = ports or {name: free_port() for name in service_names}
    obj = {name: {"location": f"socket://127.0.0.1:{port}"} for name, port in ports.items()}
    return decode_json(json.dumps(obj)), ports


@pytest.fixture()
def fixture_path() -> Path:
    return FIXTURES / "smart-city.ol"


@pytest.fixture()
def local_config_path() -> Path:
    return FIXTURES / "local.json"
