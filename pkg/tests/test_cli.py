import json

import numpy as np
import pytest
from PIL import Image

from printerid.cli import main
from printerid.image_io import load_page

TINY_PROFILES = [
    {"id": "tp-a", "edge_noise_sigma": 12.0, "dot_gain": 1.2,
     "banding_period": 7.0, "banding_amplitude": 22.0,
     "speckle_density": 0.0, "toner_darkness": 45.0, "rng_seed": 1},
    {"id": "tp-b", "edge_noise_sigma": 20.0, "dot_gain": 1.0,
     "banding_period": 19.0, "banding_amplitude": 14.0,
     "speckle_density": 0.0, "toner_darkness": 10.0, "rng_seed": 2},
]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    profiles = root / "profiles.json"
    profiles.write_text(json.dumps(TINY_PROFILES))
    out = root / "data"
    rc = main(["synth", "--profiles", str(profiles), "--pages-per-printer", "2",
               "--letters-per-page", "60", "--train-pages", "1",
               "--seed", "3", "--out", str(out)])
    assert rc == 0
    return root


def test_synth_outputs(dataset):
    out = dataset / "data"
    assert (out / "manifest.csv").is_file()
    assert (out / "truth.csv").is_file()
    assert (out / "profiles.json").is_file()
    pages = sorted(out.glob("*.png"))
    assert len(pages) == 4
    img = load_page(pages[0])
    assert img.shape == (3508, 2480)
    truth_lines = (out / "truth.csv").read_text().splitlines()
    assert truth_lines[0] == "page_id,glyph_index,x,y,w,h,ink_count"
    assert len(truth_lines) == 1 + 4 * 60
    assert (out / "manifest.csv.run.json").is_file()


def test_extract_train_evaluate_predict(dataset, capsys):
    out = dataset / "data"
    train_feat = dataset / "train.feat"
    test_feat = dataset / "test.feat"
    for split, path in (("train", train_feat), ("test", test_feat)):
        rc = main(["extract", "--manifest", str(out / "manifest.csv"),
                   "--split", split, "--n2", "10", "--out", str(path)])
        assert rc == 0
        assert path.is_file()
        run = json.loads((path.parent / (path.name + ".run.json")).read_text())
        assert run["config"]["n2"] == 10
        assert run["config_hash"]

    model_path = dataset / "model.json"
    rc = main(["train", "--features", str(train_feat), "--out", str(model_path)])
    assert rc == 0
    doc = json.loads(model_path.read_text())
    assert doc["classes"] == ["tp-a", "tp-b"]
    assert len(doc["pairs"]) == 1

    ev_dir = dataset / "eval"
    rc = main(["evaluate", "--model", str(model_path), "--features", str(test_feat),
               "--out-dir", str(ev_dir)])
    assert rc == 0
    assert (ev_dir / "group_confusion.csv").is_file()
    assert (ev_dir / "page_confusion.csv").is_file()
    assert "average accuracy" in (ev_dir / "confusion.txt").read_text()

    page = next(out.glob("tp-a-p001.png"))
    rc = main(["predict", "--model", str(model_path), "--image", str(page)])
    assert rc == 0
    captured = capsys.readouterr().out
    doc = json.loads(captured[captured.index("{"):])
    assert doc["label"] in ("tp-a", "tp-b")
    assert doc["groups"]


def test_evaluate_refuses_config_mismatch(dataset):
    out = dataset / "data"
    other_feat = dataset / "other.feat"
    rc = main(["extract", "--manifest", str(out / "manifest.csv"), "--split", "test",
               "--n2", "5", "--out", str(other_feat)])
    assert rc == 0
    rc = main(["evaluate", "--model", str(dataset / "model.json"),
               "--features", str(other_feat), "--out-dir", str(dataset / "ev2")])
    assert rc == 1


def test_inspect_boxes_and_regions(dataset):
    out = dataset / "data"
    page = next(out.glob("tp-a-p000.png"))
    boxes_csv = dataset / "boxes.csv"
    regions_dir = dataset / "regions"
    rc = main(["inspect", "--image", str(page), "--out", str(boxes_csv),
               "--regions", str(regions_dir)])
    assert rc == 0
    lines = boxes_csv.read_text().splitlines()
    assert lines[0] == "page_id,index,x,y,w,h,area"
    assert len(lines) == 61
    assert len(list(regions_dir.glob("*.png"))) > 0
    rgb = np.asarray(Image.open(next(regions_dir.glob("*.png"))))
    assert rgb.ndim == 3 and rgb.shape[2] == 3


def test_config_file_and_flag_override(dataset, tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"n2": 7, "alpha": 0.65}))
    out_feat = tmp_path / "o.feat"
    rc = main(["extract", "--manifest", str(dataset / "data" / "manifest.csv"),
               "--split", "train", "--config", str(cfg_path),
               "--alpha", "0.7", "--out", str(out_feat)])
    assert rc == 0
    run = json.loads((out_feat.parent / (out_feat.name + ".run.json")).read_text())
    assert run["config"]["n2"] == 7
    assert run["config"]["alpha"] == 0.7


def test_unknown_config_field_fails(dataset, tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"nonsense_field": 1}))
    rc = main(["extract", "--manifest", str(dataset / "data" / "manifest.csv"),
               "--config", str(cfg_path), "--out", str(tmp_path / "x.feat")])
    assert rc == 1


def test_missing_manifest_fails(tmp_path):
    rc = main(["extract", "--manifest", str(tmp_path / "none.csv"),
               "--out", str(tmp_path / "x.feat")])
    assert rc == 1


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "printerid" in capsys.readouterr().out


def test_unknown_subcommand_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
