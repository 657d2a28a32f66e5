import numpy as np
import pytest

from voltip import (PhantomSpec, PipelineConfig, ValidationError, blend, generate,
                    load_config_file, run_pipeline)


@pytest.fixture(scope="module")
def scans():
    threat, _ = generate(PhantomSpec("cube-threat", (14, 14, 14), seed=1))
    bag, truth = generate(PhantomSpec("cluttered-bag", (32, 32, 32), seed=2))
    return threat, bag, truth


def test_run_pipeline_produces_scored_tip(scans):
    threat_scan, bag_scan, _ = scans
    out = run_pipeline(threat_scan, bag_scan, PipelineConfig(seed=3, apply_mag=False))
    assert out.insertion.score >= 90.0
    assert out.tip.dims == bag_scan.dims
    assert out.tip.data.tobytes() == out.insertion.volume.data.tobytes()


def test_mag_on_metal_free_bag_equals_plain_blend(scans):
    threat_scan, bag_scan, _ = scans
    out = run_pipeline(threat_scan, bag_scan, PipelineConfig(seed=3, apply_mag=True))
    want = blend(out.threat, out.indicator, bag_scan, out.insertion.pose)
    assert out.tip.data.tobytes() == want.data.tobytes()


def test_pipeline_deterministic(scans):
    threat_scan, bag_scan, _ = scans
    cfg = PipelineConfig(seed=17, apply_mag=False)
    a = run_pipeline(threat_scan, bag_scan, cfg)
    b = run_pipeline(threat_scan, bag_scan, cfg)
    assert a.tip.data.tobytes() == b.tip.data.tobytes()
    assert a.insertion.cost == b.insertion.cost


def test_config_merge_types():
    cfg = PipelineConfig().merged({"n_particles": "12", "q": "0.4",
                                   "apply_mag": "false", "gravity_axis": "z"})
    assert cfg.n_particles == 12
    assert cfg.q == 0.4
    assert cfg.apply_mag is False
    assert cfg.gravity_axis == "z"


def test_config_rejects_unknown_and_garbage():
    with pytest.raises(ValidationError):
        PipelineConfig().merged({"nope": "1"})
    with pytest.raises(ValidationError):
        PipelineConfig().merged({"n_particles": "many"})
    with pytest.raises(ValidationError):
        PipelineConfig().merged({"apply_mag": "perhaps"})


def test_config_file_parsing(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\n\nseed=5\nlambda1=0.02\nrecon_filter=shepp-logan\n")
    cfg = load_config_file(str(p))
    assert cfg.seed == 5
    assert cfg.lambda1 == 0.02
    assert cfg.recon_filter == "shepp-logan"


def test_config_file_rejects_bad_lines(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("this is not a key value pair\n")
    with pytest.raises(ValidationError):
        load_config_file(str(p))
