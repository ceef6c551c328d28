"""Shared fixtures: the protocols and process scripts under protocols/."""
import os

import pytest

from crmpst.parsing import parse_process_script, parse_protocol
from crmpst.semantics.global_lts import AnnotatedGlobal
from crmpst.verifier import derive_canonical_config

PROTOCOLS_DIR = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "protocols"
)


def protocol_path(name: str) -> str:
    return os.path.join(PROTOCOLS_DIR, name)


def read_fixture(name: str) -> str:
    with open(protocol_path(name), encoding="utf-8") as f:
        return f.read()


@pytest.fixture(scope="session")
def logging_decl():
    return parse_protocol(read_fixture("logging.crmpst"))


@pytest.fixture(scope="session")
def nbac_decl():
    return parse_protocol(read_fixture("nbac.crmpst"))


@pytest.fixture(scope="session")
def simple_logger_decl():
    return parse_protocol(read_fixture("simple_logger.crmpst"))


@pytest.fixture(scope="session")
def logging_session(logging_decl):
    return parse_process_script(read_fixture("logging.crproc"), logging_decl).session()


@pytest.fixture(scope="session")
def nbac_session(nbac_decl):
    return parse_process_script(read_fixture("nbac.crproc"), nbac_decl).session()


@pytest.fixture(scope="session")
def logging_config(logging_decl):
    ann = AnnotatedGlobal.initial(logging_decl.body)
    return derive_canonical_config(ann, logging_decl.reliable, logging_decl.role_names)


@pytest.fixture(scope="session")
def nbac_config(nbac_decl):
    ann = AnnotatedGlobal.initial(nbac_decl.body)
    return derive_canonical_config(ann, nbac_decl.reliable, nbac_decl.role_names)


@pytest.fixture(scope="session")
def request_decl():
    return parse_protocol(read_fixture("request.crmpst"))


@pytest.fixture(scope="session")
def request_session(request_decl):
    return parse_process_script(read_fixture("request.crproc"), request_decl).session()
