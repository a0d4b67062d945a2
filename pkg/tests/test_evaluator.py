import pytest

from containment import generic_compare
from errors import ConcretizationError, LeafTypeError, TaxonomyMismatch, UnboundReference
from evaluator import EvaluationContext, concretize_capability, concretize_with_trace, evaluate_expression
from expressions import parse_expression
from odd_model import (ROOT_NAME, BooleanValue, ExpressionValue, IntegerValue, LeafKind, LeafType,
                       OddDocument, RealValue, Role, Taxonomy, TaxonomyNode, TextSetValue, ViolationCode)
from tests.conftest import AZIMUTH, ELEVATION, REGION


def with_sut_expression(cap, source):
    return cap.with_assignments({**cap.assignments,
                                 "sut_fidelity": ExpressionValue(parse_expression(source), source)})


def evaluate(source, requirement):
    return evaluate_expression(parse_expression(source), EvaluationContext(requirement))


# Границы условия бликов: азимут 116..136 включительно, высота не выше 10
@pytest.mark.parametrize("azimuth, elevation, expected", [
    (126.0, 6.0, 1),
    (116.0, 10.0, 1),
    (136.0, 10.0, 1),
    (115.999, 6.0, 2),
    (136.001, 6.0, 2),
    (126.0, 10.001, 2),
])
def test_glare_conditional_boundaries(carla, make_requirement, azimuth, elevation, expected):
    req = make_requirement(azimuth=azimuth, elevation=elevation)
    concrete = concretize_capability(carla, req)
    assert concrete.assignments["sut_fidelity"] == IntegerValue(expected)


def test_real_comparison_is_exact(carla, make_requirement):
    req = make_requirement(azimuth=136.00000000000003)
    assert concretize_capability(carla, req).assignments["sut_fidelity"] == IntegerValue(2)


def test_concretize_case_study(carla, requirement):
    concrete, trace = concretize_with_trace(carla, requirement)

    assert concrete.is_concrete
    assert concrete.attributes.as_tuple() == (3, 3, 2, 1)
    assert [entry.path for entry in trace] == ["sut_fidelity"]
    assert trace[0].value == IntegerValue(1)
    assert trace[0].expression == carla.assignments["sut_fidelity"].source
    for path, value in carla.assignments.items():
        if path != "sut_fidelity":
            assert concrete.assignments[path] == value


def test_concretize_leaves_inputs_untouched(carla, requirement):
    before_cap, before_req = dict(carla.assignments), dict(requirement.assignments)
    concretize_capability(carla, requirement)
    assert carla.assignments == before_cap
    assert requirement.assignments == before_req
    assert isinstance(carla.assignments["sut_fidelity"], ExpressionValue)


def test_concretize_is_idempotent(carla, requirement):
    once = concretize_capability(carla, requirement)
    assert concretize_capability(once, requirement) == once


def test_concrete_capability_returned_as_is(scale_truck, requirement):
    concrete, trace = concretize_with_trace(scale_truck, requirement)
    assert concrete is scale_truck
    assert trace == []


def test_result_outside_range(carla, requirement):
    cap = with_sut_expression(carla, "if true then 5 else 1")
    with pytest.raises(ConcretizationError) as info:
        concretize_capability(cap, requirement)
    assert info.value.path == "sut_fidelity"
    assert [v.code for v in info.value.violations] == [ViolationCode.CONSTRAINT]


def test_real_result_coerced_to_integer_leaf(carla, requirement):
    cap = with_sut_expression(carla, "if true then 2.0 else 1")
    assert concretize_capability(cap, requirement).assignments["sut_fidelity"] == IntegerValue(2)


def test_unbound_reference(carla, requirement):
    assignments = dict(requirement.assignments)
    del assignments[ELEVATION]
    with pytest.raises(UnboundReference) as info:
        concretize_capability(carla, requirement.with_assignments(assignments))
    assert info.value.path == "sut_fidelity"


def test_type_error_on_mixed_comparison(carla, requirement):
    cap = with_sut_expression(carla, f"if req:{REGION} <= 1 then 1 else 2")
    with pytest.raises(TypeError):
        concretize_capability(cap, requirement)


def test_text_equality(requirement):
    assert evaluate(f'req:{REGION} == "sweden"', requirement) == BooleanValue(True)
    assert evaluate(f'req:{REGION} != "sweden"', requirement) == BooleanValue(False)


def test_integer_and_real_compare_numerically(requirement):
    assert evaluate("1 == 1.0", requirement) == BooleanValue(True)
    assert evaluate(f"req:{AZIMUTH} > 100", requirement) == BooleanValue(True)


def test_and_evaluates_every_operand(requirement):
    with pytest.raises(UnboundReference):
        evaluate("false and req:scenery/nowhere <= 1", requirement)


def test_if_evaluates_only_chosen_branch(requirement):
    assert evaluate("if true then 1 else req:scenery/nowhere", requirement) == IntegerValue(1)
    assert evaluate("if false then req:scenery/nowhere else 2.5", requirement) == RealValue(2.5)


def test_condition_must_be_boolean(requirement):
    with pytest.raises(LeafTypeError):
        evaluate("if 1 then 1 else 2", requirement)
    with pytest.raises(LeafTypeError):
        evaluate("not 3", requirement)


def test_capability_cannot_serve_as_requirement(carla, scale_truck):
    with pytest.raises(LeafTypeError):
        concretize_capability(carla, scale_truck)


def test_unrelated_taxonomies(carla, requirement):
    root = TaxonomyNode(ROOT_NAME, (TaxonomyNode("flag", leaf_type=LeafType(LeafKind.BOOLEAN)),))
    other = OddDocument("other", Role.REQUIREMENT, Taxonomy(id="other", root=root),
                        {"flag": BooleanValue(True)})
    with pytest.raises(TaxonomyMismatch):
        concretize_capability(carla, other)


def test_text_result_becomes_text_set(carla, requirement):
    road_type = "scenery/drivable_area/road_type"
    source = 'if true then "yard" else "urban"'
    cap = carla.with_assignments({**carla.assignments,
                                  road_type: ExpressionValue(parse_expression(source), source)})
    req = requirement.with_assignments({**requirement.assignments, road_type: TextSetValue(frozenset({"yard"}))})

    assert concretize_capability(cap, req).assignments[road_type] == TextSetValue(frozenset({"yard"}))
    verdict = generic_compare(cap, req)
    assert [v.path for v in verdict.failures] == ["sut_fidelity"]
