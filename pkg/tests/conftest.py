import pytest

import meshgen
from scenefix import build_scene_workspace


@pytest.fixture
def cube_obj_text():
    return meshgen.obj_text([("cube", *meshgen.unit_cube())])


@pytest.fixture(scope="session")
def bicycle_obj_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("meshes") / "bicycle.obj"
    path.write_text(meshgen.obj_text(meshgen.bicycle_sections()))
    return path


@pytest.fixture
def scene_workspace(tmp_path):
    return build_scene_workspace(tmp_path)
