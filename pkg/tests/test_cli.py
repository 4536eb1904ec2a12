"""Command-line interface: exit codes, files written, report contents."""

import json
import os

import numpy as np
import pytest

from gvclab.cli import main
from gvclab.metrics import validate_report
from gvclab.video_io import parse_y4m, write_y4m

from conftest import make_gray_video, moving_stack


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture()
def y4m_file(workdir):
    video = make_gray_video(moving_stack(13, 24, 32, seed=5))
    path = workdir / "in.y4m"
    path.write_bytes(write_y4m(video))
    return path


OP_ARGS = ["--gop-size", "6", "--refine-iters", "1"]


def test_encode_decode_roundtrip(workdir, y4m_file, capsys):
    assert main(["encode", str(y4m_file), "-o", "out.gvc", *OP_ARGS]) == 0
    err = capsys.readouterr().err
    assert "2 GOPs" in err and "1 frames discarded" in err
    assert main(["decode", "out.gvc", "-o", "back.y4m", "--report", "dec.json"]) == 0
    video = parse_y4m((workdir / "back.y4m").read_bytes())
    assert (video.width, video.height) == (32, 24)
    assert len(video.frames) == 12
    report = json.loads((workdir / "dec.json").read_text())
    assert [g["gop_index"] for g in report["gops"]] == [0, 1]
    assert all(g["iterations_run"] == 1 for g in report["gops"])


def test_encode_accepts_raw_planar_input(workdir, capsys):
    stack = moving_stack(6, 8, 16, seed=2)
    (workdir / "in.yuv").write_bytes(stack.tobytes())
    rc = main(
        ["encode", "in.yuv", "-o", "raw.gvc", "--raw-size", "16x8",
         "--raw-chroma", "mono", "--raw-fps", "30:1", "--gop-size", "6"]
    )
    assert rc == 0
    assert main(["decode", "raw.gvc", "-o", "raw.y4m"]) == 0
    video = parse_y4m((workdir / "raw.y4m").read_bytes())
    assert len(video.frames) == 6
    assert str(video.frame_rate) == "30"


def test_eval_writes_valid_report_and_csv(workdir, y4m_file):
    rc = main(
        ["eval", str(y4m_file), "--name", "demo", "--report", "r.json",
         "--csv", "r.csv", *OP_ARGS]
    )
    assert rc == 0
    report = json.loads((workdir / "r.json").read_text())
    validate_report(report)
    assert report["sequences"][0]["name"] == "demo"
    assert report["sequences"][0]["coded_frames"] == 12
    lines = (workdir / "r.csv").read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("name,")


def test_exit_code_2_on_malformed_input(workdir):
    (workdir / "junk.y4m").write_bytes(b"not a video")
    assert main(["encode", "junk.y4m", "-o", "x.gvc"]) == 2
    assert not (workdir / "x.gvc").exists()


def test_exit_code_3_on_short_input(workdir):
    video = make_gray_video(np.zeros((3, 16, 16), dtype=np.uint8))
    (workdir / "short.y4m").write_bytes(write_y4m(video))
    assert main(["encode", "short.y4m", "-o", "x.gvc", "--gop-size", "6"]) == 3
    assert not (workdir / "x.gvc").exists()


def test_exit_code_3_on_bad_operating_point(workdir, y4m_file):
    assert main(["encode", str(y4m_file), "-o", "x.gvc", "--quant-step", "-1"]) == 3


def test_exit_code_4_on_corruption(workdir, y4m_file):
    assert main(["encode", str(y4m_file), "-o", "ok.gvc", *OP_ARGS]) == 0
    data = bytearray((workdir / "ok.gvc").read_bytes())
    data[0] ^= 0xFF
    (workdir / "bad_magic.gvc").write_bytes(bytes(data))
    assert main(["decode", "bad_magic.gvc", "-o", "y.y4m"]) == 4
    assert not (workdir / "y.y4m").exists()

    (workdir / "trunc.gvc").write_bytes((workdir / "ok.gvc").read_bytes()[:-7])
    assert main(["decode", "trunc.gvc", "-o", "z.y4m"]) == 4
    assert not (workdir / "z.y4m").exists()


def test_failed_decode_leaves_no_partial_output(workdir, y4m_file):
    assert main(["encode", str(y4m_file), "-o", "ok.gvc", *OP_ARGS]) == 0
    payload = bytearray((workdir / "ok.gvc").read_bytes())
    payload[-3] ^= 0x40  # corrupt inside the last GOP payload
    (workdir / "mid.gvc").write_bytes(bytes(payload))
    assert main(["decode", "mid.gvc", "-o", "partial.y4m"]) == 4
    assert not (workdir / "partial.y4m").exists()


def test_encode_deterministic_across_workers(workdir, y4m_file):
    assert main(["encode", str(y4m_file), "-o", "w1.gvc", "--workers", "1", *OP_ARGS]) == 0
    assert main(["encode", str(y4m_file), "-o", "w4.gvc", "--workers", "4", *OP_ARGS]) == 0
    assert (workdir / "w1.gvc").read_bytes() == (workdir / "w4.gvc").read_bytes()


def test_plan_json_and_exit_codes(workdir, capsys):
    rc = main(["plan", "--profile", "4090", "--resolution", "480p", "--latency", "2.5"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["rung_index"] == 1
    assert out["explanation"] == "latency-bound"
    assert out["predicted_latency_s"] == pytest.approx(2.30)

    assert main(["plan", "--profile", "4090", "--resolution", "1080p", "--latency", "10"]) == 5
    assert main(["plan", "--profile", "nope", "--resolution", "480p", "--latency", "5"]) == 3


def test_plan_with_custom_ladder(workdir, capsys):
    ladder = {
        "rungs": [
            {
                "operating_point": {
                    "quant_step": 8.0, "spatial_stride": 16, "temporal_stride": 4,
                    "descriptor_len": 16, "refine_iters": 0, "gop_size": 29,
                },
                "predicted_bpp": 0.02,
                "latency_scale": 0.4,
            }
        ]
    }
    (workdir / "ladder.json").write_text(json.dumps(ladder))
    rc = main(
        ["plan", "--profile", "H200", "--resolution", "1080p", "--latency", "3.0",
         "--ladder", "ladder.json"]
    )
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["predicted_latency_s"] == pytest.approx(0.5 + 6.1 * 0.4)


def test_simulate_scenario_and_stream_override(workdir, y4m_file, capsys):
    scenario = {
        "link": {"rate_bps": 1e6, "propagation_delay_s": 0.1},
        "stream": {"bpp": 0.008, "width": 640, "height": 360, "frames": 64},
        "reference": {"bpp": 0.048, "width": 640, "height": 360, "frames": 64},
    }
    (workdir / "scen.json").write_text(json.dumps(scenario))
    assert main(["simulate", "scen.json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["bandwidth_ratio"] == pytest.approx(6.0, abs=1e-9)

    assert main(["encode", str(y4m_file), "-o", "s.gvc", *OP_ARGS]) == 0
    assert main(["simulate", "scen.json", "--stream", "s.gvc", "--report", "sim.json"]) == 0
    report = json.loads((workdir / "sim.json").read_text())
    assert report["stream"]["total_bits"] == 8 * (workdir / "s.gvc").stat().st_size
    assert len(report["stream"]["gop_completion_times"]) == 2


def test_simulate_malformed_scenario(workdir):
    (workdir / "bad.json").write_text('{"link": {"rate_bps": 1000}}')
    assert main(["simulate", "bad.json"]) == 2
    (workdir / "notjson.json").write_text("not json")
    assert main(["simulate", "notjson.json"]) == 2


def test_corpus_generator_and_manifest(workdir):
    assert main(["corpus", "seq", "--generator", "static", "--seed", "3",
                 "--size", "32x16", "--frames", "4"]) == 0
    video = parse_y4m((workdir / "seq" / "static-3.y4m").read_bytes())
    assert (video.width, video.height) == (32, 16)
    assert len(video.frames) == 4


def test_corpus_custom_manifest(workdir):
    manifest = {
        "sequences": [
            {"id": "tiny", "generator": "moving-gradient", "seed": 2,
             "width": 16, "height": 8, "frames": 3}
        ]
    }
    (workdir / "m.json").write_text(json.dumps(manifest))
    assert main(["corpus", "out", "--manifest", "m.json"]) == 0
    video = parse_y4m((workdir / "out" / "tiny.y4m").read_bytes())
    assert len(video.frames) == 3
