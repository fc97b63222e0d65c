import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from designrecolor.cli import main
from designrecolor.synth import GeneratorConfig, generate_case
from designrecolor.bundle import save_bundle


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    case = generate_case(GeneratorConfig(seed=12), 0)
    path = tmp_path_factory.mktemp("cli") / "bundle"
    save_bundle(case.bundle, path)
    return path, case


def colorful_instruction(case):
    for item in case.instructions:
        if len(item["regions"]) == 1 and item["regions"][0]["color_adj"] != "none":
            return item
    raise AssertionError("no usable instruction")


def test_unknown_flag_exits_2():
    proc = subprocess.run(
        [sys.executable, "-m", "designrecolor.cli", "recolor", "--nope"],
        capture_output=True,
    )
    assert proc.returncode == 2


def test_pipeline_error_exits_1(bundle_dir, capsys):
    path, case = bundle_dir
    rc = run_cli(
        "recolor", "--bundle", str(path), "--instruction", "recolor the hat into the banner",
        "--out", str(path.parent / "x"),
    )
    assert rc == 1
    err = capsys.readouterr().err
    assert "[parser:unknown-element-term]" in err


def test_predict_colors_report(bundle_dir, tmp_path):
    path, case = bundle_dir
    item = colorful_instruction(case)
    out = tmp_path / "report.json"
    rc = run_cli(
        "predict-colors", "--bundle", str(path), "--instruction", item["text"],
        "--out", str(out),
    )
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["instruction"] == item["text"]
    assert doc["threshold"] == 0.55
    assert doc["granularity"] == item["granularity"]
    got = [c["rgb"] for c in doc["colors"]]
    for gt in item["gt_source_colors"]:
        assert gt in got


def test_recolor_writes_manifest_and_images(bundle_dir, tmp_path):
    path, case = bundle_dir
    item = colorful_instruction(case)
    out = tmp_path / "results"
    rc = run_cli(
        "recolor", "--bundle", str(path), "--instruction", item["text"], "--out", str(out)
    )
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["instruction"] == item["text"]
    assert manifest["results"]
    for entry in manifest["results"]:
        assert (out / entry["image_path"]).exists()


def test_palette_and_decompose(bundle_dir, tmp_path):
    path, case = bundle_dir
    photo_png = path / "photo.png"
    pal_path = tmp_path / "palette.json"
    rc = run_cli("palette", "--photo", str(photo_png), "--n", "4", "--out", str(pal_path))
    assert rc == 0
    doc = json.loads(pal_path.read_text())
    assert len(doc["colors"]) <= 4 and "rmse" in doc

    out = tmp_path / "layers"
    rc = run_cli("decompose", "--photo", str(photo_png), "--n", "4", "--out", str(out))
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["reconstruction_rmse"] <= 2.5 / 255.0
    # alphas on disk sum to ~255 per pixel
    total = None
    for entry in manifest["layers"]:
        with Image.open(out / entry["alpha_path"]) as im:
            arr = np.asarray(im, dtype=np.int64)
        total = arr if total is None else total + arr
    assert np.abs(total - 255).max() <= len(manifest["layers"])


def test_refine_cli(bundle_dir, tmp_path):
    path, case = bundle_dir
    photo = case.bundle.photo
    mask = np.zeros(photo.shape[:2], np.uint8)
    mask[4 : photo.shape[0] // 2, 4 : photo.shape[1] // 2] = 255
    mask_path = tmp_path / "mask.png"
    Image.fromarray(mask).save(mask_path)
    out = tmp_path / "soft.png"
    rc = run_cli(
        "refine", "--photo", str(path / "photo.png"), "--mask", str(mask_path),
        "--out", str(out),
    )
    assert rc == 0
    with Image.open(out) as im:
        soft = np.asarray(im)
    assert soft.shape == photo.shape[:2]


def test_eval_outputs(tmp_path):
    from designrecolor.synth import generate_dataset

    ds = tmp_path / "ds"
    generate_dataset(GeneratorConfig(seed=13, count=3), ds)
    out = tmp_path / "report"
    rc = run_cli("eval", "--dataset", str(ds), "--out", str(out))
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["parser_round_trip_rate"] == 1.0
    assert report["color_mse"] == 0.0
    assert (out / "accuracy_vs_threshold.csv").exists()
    assert (out / "accuracy_vs_threshold.png").exists()


def test_batch(bundle_dir, tmp_path):
    collection = tmp_path / "collection"
    ids = []
    for i in range(2):
        case = generate_case(GeneratorConfig(seed=14), i)
        save_bundle(case.bundle, collection / f"design_{i}")
        ids.append(case)
    rc = run_cli(
        "batch", "--collection", str(collection),
        "--instruction", "recolor the sofa into the background",
        "--out", str(tmp_path / "batch_out"),
    )
    assert rc in (0, 1)  # some designs may lack a matching region provider


def test_cli_matches_library(bundle_dir, tmp_path):
    from designrecolor.recolor import recolor_instruction
    from designrecolor.bundle import load_bundle

    path, case = bundle_dir
    item = colorful_instruction(case)
    out = tmp_path / "viacli"
    assert run_cli(
        "recolor", "--bundle", str(path), "--instruction", item["text"], "--out", str(out)
    ) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    results = recolor_instruction(load_bundle(path), item["text"])
    assert len(results) == len(manifest["results"])
    for entry, res in zip(manifest["results"], results):
        with Image.open(out / entry["image_path"]) as im:
            disk = np.asarray(im.convert("RGB"))
        assert np.array_equal(disk, res.photo)
