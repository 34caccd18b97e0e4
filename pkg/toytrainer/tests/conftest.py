import pytest

from toytrainer.shapes import generate_shapes_dataset

from tt_helpers import tiny_config


@pytest.fixture(scope="session")
def tiny_cfg():
    return tiny_config()


@pytest.fixture(scope="session")
def tiny_data(tiny_cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("shapes-tiny")
    generate_shapes_dataset(tiny_cfg, out)
    return out
