import json
import random
import time

import pytest
import yaml

import cli
from tests.conftest import CARLA_FILE, CASE_STUDY, REQUIREMENT_FILE, SCALE_TRUCK_FILE, requirement_text

REQUIREMENTS_DIR = CASE_STUDY / "requirements"
ENVIRONMENTS_DIR = CASE_STUDY / "environments"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def capability_text(category, **kwargs):
    text = requirement_text(**kwargs)
    return text.replace("role: requirement", f"role: capability\ncategory: {category}")


# VALIDATE

def test_validate_case_study(capsys):
    code = cli.main(["validate", str(REQUIREMENT_FILE), str(CARLA_FILE), str(SCALE_TRUCK_FILE)])
    assert code == cli.EXIT_OK
    assert "warning: test_environment_fidelity" in capsys.readouterr().err


def test_validate_reports_violations(tmp_path, capsys):
    bad = write(tmp_path / "bad.yaml", requirement_text(levels=(4, 1, 2, 2)))
    assert cli.main(["validate", bad, str(REQUIREMENT_FILE)]) == cli.EXIT_NEGATIVE
    err = capsys.readouterr().err
    assert f"{bad}:" in err
    assert "safety_hazard_mitigation" in err
    assert "[constraint]" in err


def test_validate_syntax_error(tmp_path, capsys):
    broken = write(tmp_path / "broken.yaml", "id: x\nrole: [requirement\n")
    assert cli.main(["validate", broken]) == cli.EXIT_NEGATIVE
    assert capsys.readouterr().err.startswith(f"{broken}:")


def test_validate_missing_file(tmp_path):
    assert cli.main(["validate", str(tmp_path / "nowhere.yaml")]) == cli.EXIT_ERROR


def test_validate_oversized_numbers(tmp_path, capsys):
    huge = "1" + "0" * 400
    wind = write(tmp_path / "wind.yaml", requirement_text() + f"  environment/weather/wind_speed: {huge}\n")
    expression = write(tmp_path / "expr.yaml", capability_text("virtual").replace(
        "sut_fidelity: 2", 'sut_fidelity: {expr: "1e400 > 1"}'))
    assert cli.main(["validate", wind, expression]) == cli.EXIT_NEGATIVE
    err = capsys.readouterr().err
    assert f"{wind}:" in err
    assert f"{expression}:" in err


def test_compare_oversized_number(tmp_path):
    req = write(tmp_path / "req.yaml", requirement_text().replace("126.0", "1" + "0" * 400))
    assert cli.main(["compare", "--cap", str(SCALE_TRUCK_FILE), "--req", req]) == cli.EXIT_ERROR


def test_usage_error():
    assert cli.main([]) == cli.EXIT_ERROR
    assert cli.main(["compare", "--cap", str(CARLA_FILE)]) == cli.EXIT_ERROR


def test_help():
    assert cli.main(["--help"]) == cli.EXIT_OK


# COMPARE

def test_compare_carla_fails(capsys):
    code = cli.main(["compare", "--cap", str(CARLA_FILE), "--req", str(REQUIREMENT_FILE)])
    out, err = capsys.readouterr()
    assert code == cli.EXIT_NEGATIVE
    assert yaml.safe_load(out)["within"] is False
    assert "sut_fidelity" in err


def test_case_study_compare_is_fast():
    start = time.perf_counter()
    for cap in (CARLA_FILE, SCALE_TRUCK_FILE):
        cli.main(["compare", "--cap", str(cap), "--req", str(REQUIREMENT_FILE)])
    assert time.perf_counter() - start < 1.0


def test_compare_scale_truck_to_file(tmp_path):
    report = tmp_path / "verdict.json"
    code = cli.main(["compare", "--cap", str(SCALE_TRUCK_FILE), "--req", str(REQUIREMENT_FILE),
                     "--report", str(report), "--format", "json"])
    assert code == cli.EXIT_OK
    assert json.loads(report.read_text(encoding="utf-8"))["within"] is True


def test_compare_writes_concretized_capability(tmp_path):
    concretized = tmp_path / "carla_concrete.yaml"
    cli.main(["compare", "--cap", str(CARLA_FILE), "--req", str(REQUIREMENT_FILE),
              "--report", str(tmp_path / "verdict.yaml"), "--concretized", str(concretized)])
    data = yaml.safe_load(concretized.read_text(encoding="utf-8"))
    assert data["assignments"]["sut_fidelity"] == 1


def test_compare_requirement_with_itself():
    assert cli.main(["compare", "--cap", str(REQUIREMENT_FILE), "--req", str(REQUIREMENT_FILE)]) == cli.EXIT_OK


def test_compare_carla_outside_glare_window(tmp_path):
    req = write(tmp_path / "afternoon.yaml", requirement_text(azimuth=200.0, doc_id="afternoon"))
    assert cli.main(["compare", "--cap", str(CARLA_FILE), "--req", req]) == cli.EXIT_OK


def test_expression_document_cannot_be_requirement(capsys):
    code = cli.main(["compare", "--cap", str(SCALE_TRUCK_FILE), "--req", str(CARLA_FILE)])
    assert code == cli.EXIT_ERROR
    assert "error:" in capsys.readouterr().err


def test_compare_parse_error(tmp_path, capsys):
    bad = write(tmp_path / "bad.yaml", requirement_text(elevation=120.0))
    assert cli.main(["compare", "--cap", str(SCALE_TRUCK_FILE), "--req", bad]) == cli.EXIT_ERROR
    assert "sun_elevation_angle" in capsys.readouterr().err


# ALLOCATE

def test_allocate_case_study(tmp_path):
    report, excel, heatmap = tmp_path / "report.yaml", tmp_path / "report.xlsx", tmp_path / "slack.png"
    code = cli.main(["allocate", "--req-dir", str(REQUIREMENTS_DIR), "--cap-dir", str(ENVIRONMENTS_DIR),
                     "--report", str(report), "--excel", str(excel), "--heatmap", str(heatmap)])
    assert code == cli.EXIT_OK
    data = yaml.safe_load(report.read_text(encoding="utf-8"))
    assert data["feasible"] == {"odd_req": ["scale_truck"]}
    assert excel.read_bytes()[:2] == b"PK"
    assert heatmap.read_bytes()[:4] == b"\x89PNG"


def test_allocate_unallocated_case(tmp_path, capsys):
    requirements = tmp_path / "requirements"
    requirements.mkdir()
    write(requirements / "high_sun.yaml", requirement_text(elevation=20.0, levels=(1, 1, 2, 3), doc_id="high_sun"))
    code = cli.main(["allocate", "--req-dir", str(requirements), "--cap-dir", str(ENVIRONMENTS_DIR),
                     "--report", str(tmp_path / "report.yaml")])
    assert code == cli.EXIT_NEGATIVE
    assert "high_sun" in capsys.readouterr().err


def test_allocate_missing_directory(tmp_path):
    code = cli.main(["allocate", "--req-dir", str(tmp_path / "nowhere"), "--cap-dir", str(ENVIRONMENTS_DIR),
                     "--report", str(tmp_path / "report.yaml")])
    assert code == cli.EXIT_ERROR


def test_allocate_report_ignores_file_order(tmp_path, monkeypatch):
    requirements, environments = tmp_path / "requirements", tmp_path / "environments"
    requirements.mkdir()
    environments.mkdir()
    for i in range(10):
        write(requirements / f"case_{i}.yaml",
              requirement_text(azimuth=100.0 + 5 * i, elevation=2.0 * i, levels=(1, 1 + i % 3, 2, 1 + i % 2),
                               doc_id=f"case_{i}"))
    for source in (CARLA_FILE, SCALE_TRUCK_FILE):
        write(environments / source.name, source.read_text(encoding="utf-8"))
    write(environments / "proving_ground.yaml",
          capability_text("track", azimuth=360.0, elevation=90.0, levels=(1, 1, 3, 3), doc_id="proving_ground"))
    write(environments / "sil_rig.yaml",
          capability_text("virtual", azimuth=360.0, elevation=15.0, levels=(3, 3, 1, 1), doc_id="sil_rig"))

    listing = cli.list_document_files
    rng = random.Random(7)

    def shuffled(directory):
        files = listing(directory)
        rng.shuffle(files)
        return files

    monkeypatch.setattr(cli, "list_document_files", shuffled)

    reports = set()
    for run in range(20):
        report = tmp_path / f"report_{run}.yaml"
        cli.main(["allocate", "--req-dir", str(requirements), "--cap-dir", str(environments),
                  "--report", str(report), "--workers", str(1 + run % 3)])
        reports.add(report.read_bytes())
    assert len(reports) == 1
    assert len(yaml.safe_load(reports.pop())["environments"]) == 4


def test_allocate_empty_requirement_directory(tmp_path):
    requirements = tmp_path / "requirements"
    requirements.mkdir()
    report = tmp_path / "report.yaml"
    code = cli.main(["allocate", "--req-dir", str(requirements), "--cap-dir", str(ENVIRONMENTS_DIR),
                     "--report", str(report)])
    assert code == cli.EXIT_OK
    data = yaml.safe_load(report.read_text(encoding="utf-8"))
    assert data["test_cases"] == []
    assert data["unallocated"] == []


def test_allocate_impossible_requirement(tmp_path):
    requirements = tmp_path / "requirements"
    requirements.mkdir()
    write(requirements / "demanding.yaml", requirement_text(levels=(3, 3, 3, 3), doc_id="demanding"))
    report = tmp_path / "report.yaml"
    code = cli.main(["allocate", "--req-dir", str(requirements), "--cap-dir", str(ENVIRONMENTS_DIR),
                     "--report", str(report)])
    assert code == cli.EXIT_NEGATIVE
    unallocated = yaml.safe_load(report.read_text(encoding="utf-8"))["unallocated"]
    assert [u["test_case"] for u in unallocated] == ["demanding"]


# VIZ И EXPORT

def test_viz(tmp_path):
    out = tmp_path / "carla.puml"
    assert cli.main(["viz", "--doc", str(CARLA_FILE), "--out", str(out)]) == cli.EXIT_OK
    text = out.read_text(encoding="utf-8")
    assert text.startswith("@startuml\n")
    assert text.endswith("@enduml\n")
    assert "sun_elevation_angle <= 10.0) then 1 else 2" in text


def test_viz_missing_file(tmp_path):
    assert cli.main(["viz", "--doc", str(tmp_path / "nowhere.yaml"), "--out", str(tmp_path / "x.puml")]) == cli.EXIT_ERROR


def test_export_taxonomy(capsys):
    assert cli.main(["export", "--taxonomy-id", "ext_odd", "--format", "json"]) == cli.EXIT_OK
    assert json.loads(capsys.readouterr().out)["lineage"] == ["ext_odd", "odd"]


def test_export_unknown_taxonomy(capsys):
    assert cli.main(["export", "--taxonomy-id", "nowhere"]) == cli.EXIT_ERROR
    assert "ext_odd" in capsys.readouterr().err


def test_export_document(tmp_path):
    out = tmp_path / "odd_req.yaml"
    assert cli.main(["export", "--doc", str(REQUIREMENT_FILE), "--out", str(out)]) == cli.EXIT_OK
    assert "sun_azimuth_angle: 126.0" in out.read_text(encoding="utf-8")


@pytest.mark.parametrize("command", ["compare", "export"])
def test_extra_taxonomy_file(tmp_path, command):
    taxonomy = write(tmp_path / "glare.yaml", "id: glare\nextends: ext_odd\nnodes:\n"
                                              "  environment:\n    illumination:\n"
                                              "      glare_index: {kind: real, range: [0, 1]}\n")
    doc = write(tmp_path / "doc.yaml", requirement_text().replace("taxonomy: ext_odd", "taxonomy: glare")
                + "  environment/illumination/glare_index: 0.4\n")
    if command == "compare":
        argv = ["compare", "--cap", doc, "--req", str(REQUIREMENT_FILE)]
    else:
        argv = ["export", "--doc", doc, "--out", str(tmp_path / "out.yaml")]
    assert cli.main(argv + ["--taxonomy", taxonomy]) == cli.EXIT_OK
