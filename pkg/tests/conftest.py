from pathlib import Path

import pytest

from odd_model import Role
from odd_parser import TaxonomyRegistry, load_document, parse_document

ROOT = Path(__file__).resolve().parent.parent
CASE_STUDY = ROOT / "data" / "case_study"
REQUIREMENT_FILE = CASE_STUDY / "requirements" / "odd_req.yaml"
CARLA_FILE = CASE_STUDY / "environments" / "carla.yaml"
SCALE_TRUCK_FILE = CASE_STUDY / "environments" / "scale_truck.yaml"

AZIMUTH = "environment/illumination/natural_illumination/sun_azimuth_angle"
ELEVATION = "environment/illumination/natural_illumination/sun_elevation_angle"
REGION = "scenery/zone/region_or_state"
DISTRIBUTION_CENTRE = "scenery/zone/zone_type/freight_distribution_centre"

GLARE_EXPRESSION = (
    f"if (req:{AZIMUTH} >= 116.0 and req:{AZIMUTH} <= 136.0 and req:{ELEVATION} <= 10.0) "
    "then 1 else 2"
)


def requirement_text(azimuth: float = 126.0, elevation: float = 6.0, levels=(1, 1, 2, 2),
                     doc_id: str = "odd_req") -> str:
    safety, complexity, env_fidelity, sut_fidelity = levels
    return f"""
id: {doc_id}
role: requirement
taxonomy: ext_odd
assignments:
  {REGION}: sweden
  {DISTRIBUTION_CENTRE}: true
  {AZIMUTH}: {azimuth!r}
  {ELEVATION}: {elevation!r}
  safety_hazard_mitigation: {safety}
  test_complexity: {complexity}
  test_environment_fidelity: {env_fidelity}
  sut_fidelity: {sut_fidelity}
"""


@pytest.fixture(scope="session")
def registry():
    return TaxonomyRegistry.shipped()


@pytest.fixture(scope="session")
def ext_odd(registry):
    return registry.get("ext_odd")


@pytest.fixture(scope="session")
def requirement(registry):
    return load_document(REQUIREMENT_FILE, registry)


@pytest.fixture(scope="session")
def carla(registry):
    return load_document(CARLA_FILE, registry)


@pytest.fixture(scope="session")
def scale_truck(registry):
    return load_document(SCALE_TRUCK_FILE, registry)


@pytest.fixture
def make_requirement(registry):
    # Требование кейса с изменёнными углами солнца или уровнями атрибутов
    def make(**kwargs):
        return parse_document(requirement_text(**kwargs), registry)
    return make


@pytest.fixture
def as_capability():
    def flip(doc):
        return doc.with_role(Role.CAPABILITY)
    return flip
