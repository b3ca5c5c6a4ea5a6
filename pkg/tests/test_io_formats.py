import json
import math

import numpy as np
import pytest

from bgret.io_formats import (DataFormatError, RESULT_COLUMNS, format_float,
                              manifest_now, parse_config, read_config, read_image,
                              read_results, read_signal_csv, shape_token,
                              write_image, write_results, write_signal_csv)
from bgret.model import Method


def test_format_float_round_trip():
    rng = np.random.default_rng(0)
    for v in list(rng.standard_normal(200)) + [1e-300, 1e300, 0.0, -0.0]:
        assert float(format_float(v)) == v
    assert format_float(math.inf) == "inf"
    assert format_float(math.nan) == "nan"


def test_signal_csv_round_trip(tmp_path):
    path = tmp_path / "sig.csv"
    values = np.random.default_rng(1).standard_normal(64)
    write_signal_csv(path, values)
    assert np.array_equal(read_signal_csv(path), values)


def test_signal_csv_basic_and_errors(tmp_path):
    path = tmp_path / "sig.csv"
    path.write_text("# comment\n1\n2\n3\n")
    assert read_signal_csv(path).tolist() == [1.0, 2.0, 3.0]
    bad = tmp_path / "bad.csv"
    bad.write_text("1\nabc\n")
    with pytest.raises(DataFormatError, match="line 2"):
        read_signal_csv(bad)


def test_pgm_round_trip(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_text("P2\n2 2\n255\n255 255\n255 255\n")
    img = read_image(path)
    assert np.array_equal(img, np.ones((2, 2)))
    out = tmp_path / "out.pgm"
    write_image(out, img)
    assert np.array_equal(read_image(out), img)


def test_pgm_header_errors(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_text("P5\n2 2\n255\n0 0 0 0\n")
    with pytest.raises(DataFormatError):
        read_image(bad)
    short = tmp_path / "short.pgm"
    short.write_text("P2\n2 2\n255\n0 0 0\n")
    with pytest.raises(DataFormatError):
        read_image(short)


def test_csv_image_round_trip_and_ragged(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n3,4\n")
    assert read_image(path).tolist() == [[1.0, 2.0], [3.0, 4.0]]
    exact = np.random.default_rng(2).standard_normal((5, 7))
    out = tmp_path / "exact.csv"
    write_image(out, exact)
    assert np.array_equal(read_image(out), exact)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(DataFormatError, match="row 2"):
        read_image(ragged)


def test_read_config_minimal_and_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(
        {"method": "BDR", "n": 100, "k_ratio": 3, "trials": 10, "seed": 7}))
    cfg = read_config(path)
    assert cfg.method is Method.BDR
    assert cfg.eps == 1e-12 and cfg.max_iter == 300
    assert cfg.beta == 0.9 and cfg.lam == 1.0
    assert cfg.background_sizes() == (300,)
    assert cfg.background_sizes(2.0) == (200,)


def test_read_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(
        {"method": "BDR", "n": 10, "k_ratio": 3, "trials": 1, "seed": 0, "foo": 1}))
    with pytest.raises(DataFormatError, match="foo"):
        read_config(path)


def test_parse_config_type_errors_name_keys():
    base = {"method": "bdr", "n": 10, "k_ratio": 3, "trials": 1, "seed": 0}
    with pytest.raises(DataFormatError, match="trials"):
        parse_config({**base, "trials": "ten"})
    with pytest.raises(DataFormatError, match="eps"):
        parse_config({**base, "eps": "small"})
    with pytest.raises(DataFormatError, match="max_iter"):
        parse_config({**base, "max_iter": 1.5})
    with pytest.raises(DataFormatError):
        parse_config({"method": "bdr", "n": 10, "trials": 1, "seed": 0})  # no k info
    with pytest.raises(DataFormatError, match="method"):
        parse_config({"n": 10, "k_ratio": 3, "trials": 1, "seed": 0})


def test_parse_config_2d():
    cfg = parse_config({"method": "pgd", "n1": 8, "n2": 10, "k1": 4, "k2": 5,
                        "trials": 2, "seed": 1})
    assert cfg.n == (8, 10)
    assert cfg.background_sizes() == (4, 5)
    with pytest.raises(DataFormatError):
        parse_config({"method": "pgd", "n1": 8, "n2": 10, "k1": 4,
                      "trials": 2, "seed": 1})


def test_results_round_trip_and_summary(tmp_path):
    rows = [
        {"trial": t, "seed": 100 + t, "method": "bdr", "n": "100", "k": "300",
         "iterations": 42, "relative_error": 10.0 ** (-t - 4),
         "measurement_error": 1e-9, "psnr": math.nan, "ssim": math.nan,
         "success": t > 0, "wall_ms": 1.5}
        for t in range(4)
    ]
    path = tmp_path / "results.csv"
    manifest = manifest_now("0.1.0", 7, {"method": "bdr"})
    write_results(path, rows, manifest)
    back = read_results(path)
    assert len(back) == 4
    assert [r["success"] for r in back] == [False, True, True, True]
    assert sum(r["success"] for r in back) / 4 == 0.75  # recount oracle
    assert back[2]["relative_error"] == rows[2]["relative_error"]
    sidecar = path.with_suffix(".csv.manifest.json")
    payload = json.loads(sidecar.read_text())
    assert payload["seed"] == 7 and payload["version"] == "0.1.0"


def test_write_results_deterministic_bytes(tmp_path):
    rows = [{"trial": 0, "seed": 1, "method": "pgd", "n": "10", "k": "30",
             "iterations": 3, "relative_error": 0.125, "measurement_error": 0.5,
             "psnr": 1.0, "ssim": 0.5, "success": False, "wall_ms": 0.0}]
    manifest = manifest_now("0.1.0", 1, {})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_results(a, rows, manifest)
    write_results(b, rows, manifest)
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert tuple(header.split(",")) == RESULT_COLUMNS


def test_write_results_missing_column(tmp_path):
    with pytest.raises(DataFormatError, match="missing"):
        write_results(tmp_path / "x.csv", [{"trial": 0}], manifest_now("0", 0, {}))


def test_shape_token():
    assert shape_token((100,)) == "100"
    assert shape_token((64, 64)) == "64x64"
