import json

import numpy as np
import pytest

from geocloud.audio import chirp, sine, write_wav
from geocloud.errors import PipelineError, SchemaError
from geocloud.pipeline import (ComparisonReport, PipelineConfig, apply_env, compute_baselines,
                               emit_table, load_config, load_input, load_report, load_samples,
                               run_pipeline, save_samples, validate_report)
from geocloud.ply import write_ply
from geocloud.sampling import extract_samples
from geocloud.shapes import generate_cube, generate_sphere

SMALL = dict(count=60, size=32, grid=80)


def small(a, b, **kw):
    return PipelineConfig(a, b, **{**SMALL, **kw})


def test_identical_inputs_give_zero(tmp_path):
    path = tmp_path / "s.ply"
    write_ply(generate_sphere(600, seed=3), path, format="binary")
    r = run_pipeline(small(str(path), str(path), baselines=("chamfer", "hausdorff", "emd", "dj"),
                           emd_size=40, dj_size=6))
    assert r.metrics["mskl"] < 1e-9
    for k in ("chamfer", "hausdorff", "emd", "dj"):
        assert r.metrics[k] == 0.0


def test_report_deterministic_apart_from_timings():
    cfg = small("shape:sphere:600:0", "shape:cube:600:0")
    a = run_pipeline(cfg).to_json(timings=False)
    b = run_pipeline(cfg).to_json(timings=False)
    assert a == b


def test_report_schema_round_trip(tmp_path):
    out = tmp_path / "r.json"
    r = run_pipeline(small("shape:sphere:600:0", "shape:cone:600:0", output=str(out)))
    d = json.loads(out.read_text())
    validate_report(d)
    back = load_report(out)
    assert back.metrics == r.metrics and back.name_a == "sphere" and back.name_b == "cone"
    assert set(d["timings"]) >= {"load", "baseline", "sample", "reduce", "fit", "divergence"}
    d["metrics"]["mskl"] = -1.0
    with pytest.raises(SchemaError):
        validate_report(d)
    with pytest.raises(SchemaError):
        validate_report({"name_a": "x"})


def test_cross_shape_positive():
    r = run_pipeline(small("shape:sphere:600:0", "shape:cube:600:0"))
    assert r.metrics["mskl"] > 1e-6


def test_autoencoder_pipeline_records_losses():
    r = run_pipeline(small("shape:sphere:400:0", "shape:cube:400:0", count=40, reduction="ae",
                           epochs=2, ae_dtype="float32"))
    assert len(r.details["train_loss"]) == 2 and len(r.details["val_loss"]) == 2
    assert r.metrics["mskl"] >= 0


def test_wav_inputs(tmp_path):
    write_wav(sine(440.0, 1.0, 16000), tmp_path / "s.wav")
    write_wav(chirp(200.0, 4000.0, 1.0, 16000), tmp_path / "c.wav")
    cloud = load_input(str(tmp_path / "s.wav"))
    assert cloud.points.min() == 0.0 and cloud.points.max() == 1.0
    same = run_pipeline(small(str(tmp_path / "s.wav"), str(tmp_path / "s.wav")))
    diff = run_pipeline(small(str(tmp_path / "s.wav"), str(tmp_path / "c.wav")))
    assert same.metrics["mskl"] < 1e-9 < diff.metrics["mskl"]


def test_stage_errors_carry_stage_name(tmp_path):
    bad = tmp_path / "bad.ply"
    bad.write_text("ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\n"
                   "property float y\nproperty float z\nend_header\n0 0 0\n")
    with pytest.raises(PipelineError) as info:
        run_pipeline(small(str(bad), str(bad)))
    assert info.value.stage == "load"
    with pytest.raises(PipelineError) as info:
        run_pipeline(small("shape:sphere:20:0", "shape:cube:20:0"))
    assert info.value.stage == "sample"


def test_missing_file_rejected():
    with pytest.raises(FileNotFoundError):
        PipelineConfig("nope.ply", "shape:cube").validate()


def test_config_files_and_env(tmp_path):
    (tmp_path / "c.toml").write_text('input_a = "shape:cube"\ninput_b = "shape:sphere"\n'
                                     'count = 100\nseed = 4\nratios = [0.8, 0.1, 0.1]\n')
    cfg = load_config(tmp_path / "c.toml", env={})
    assert cfg.count == 100 and cfg.seed == 4 and cfg.ratios == (0.8, 0.1, 0.1)
    assert load_config(tmp_path / "c.toml", env={"GEOCLOUD_SEED": "9"}).seed == 9
    (tmp_path / "c.json").write_text(json.dumps({"input_a": "a", "input_b": "b", "bogus": 1}))
    with pytest.raises(ValueError):
        load_config(tmp_path / "c.json", env={})
    assert apply_env(cfg, {"GEOCLOUD_SEED": ""}).seed == 4


def test_baselines_subsample_for_emd():
    a, b = generate_sphere(300, seed=0), generate_cube(300, seed=0)
    out = compute_baselines(a, b, ("emd", "dj", "chamfer"), emd_size=30, dj_size=5)
    assert out["emd"] > 0 and out["dj"] > 0
    sq = compute_baselines(a, b, ("chamfer",), squared=True)
    assert sq["chamfer"] != out["chamfer"]


def test_samples_directory_round_trip(tmp_path):
    sa = extract_samples(generate_sphere(300, seed=0), 5, 16, "First", seed=1)
    sb = extract_samples(generate_cube(300, seed=0), 5, 16, "Second", seed=1)
    save_samples(sa, tmp_path)
    save_samples(sb, tmp_path)
    sets = load_samples(tmp_path)
    assert set(sets) == {"First", "Second"}
    for got, want in zip(sets["Second"].samples, sb.samples):
        np.testing.assert_array_equal(got.points, want.points)
    assert load_samples(tmp_path, "First").seeds == sa.seeds


# -- tables ----------------------------------------------------------------------

def _report(a, b, ch, h, igm):
    return ComparisonReport(a, b, {"chamfer": ch, "hausdorff": h, "mskl": igm}, {"seed": 0})


@pytest.fixture
def shape_reports():
    names = ["Sphere", "Cone", "Cube"]
    out = []
    for i, a in enumerate(names):
        for b in names[:i + 1]:
            v = 0.0 if a == b else 1.0 + i
            out.append(_report(a, b, v, v, v))
    return out


def test_table_cells(shape_reports):
    doc = json.loads(emit_table(shape_reports, "json"))
    assert len(doc["cells"]) == 6
    assert doc["names"] == ["Sphere", "Cone", "Cube"]


def test_table_csv_rows(shape_reports):
    lines = emit_table(shape_reports, "csv").strip().splitlines()
    assert lines[0] == "row,col,metric,value"
    assert len(lines) - 1 == 6 * 3


def test_table_markdown_layout(shape_reports):
    md = emit_table(shape_reports, "markdown").strip().splitlines()
    assert md[0] == "| | Sphere | Cone | Cube |"
    assert len(md) == 2 + 3
    body = [row.split("|")[2:-1] for row in md[2:]]
    # lower triangle populated, upper triangle empty
    for i, cols in enumerate(body):
        for j, cell in enumerate(cols):
            assert bool(cell.strip()) == (j <= i)
    assert "Ch = 0<br>H = 0<br>IGM = 0" in body[0][0]


def test_table_rejects_mixed_metrics(shape_reports):
    odd = ComparisonReport("A", "B", {"mskl": 1.0}, {"seed": 0})
    with pytest.raises(SchemaError):
        emit_table(shape_reports + [odd])
