import json
import subprocess
import sys

import numpy as np
import pytest

from repcount.cli import main
from repcount.flowfield import read_mask
from tests.helpers import sinusoid, two_segment_chirp


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def write_csv(path, values, header="value"):
    path.write_text(header + "\n" + "\n".join(repr(float(v)) for v in values) + "\n")
    return path


@pytest.fixture(scope="module")
def translation_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("trans")
    assert main(["synth", "--case", "translation/oscillating/side", "--period", "20", "--frames", "200", "--out", str(out)]) == 0
    return out


class TestCount:
    def test_counts_synthetic_sequence(self, capsys, translation_dir):
        code, out, _ = run(capsys, "count", str(translation_dir))
        assert code == 0
        result = json.loads(out)
        assert 9 <= result["count"] <= 11
        assert set(result) == {"count", "cost", "channel", "per_timestep_scale_seconds"}

    def test_byte_identical(self, capsys, translation_dir):
        first = run(capsys, "count", str(translation_dir))[1]
        second = run(capsys, "count", str(translation_dir))[1]
        assert first == second

    def test_thread_count_does_not_change_output(self, capsys, translation_dir, monkeypatch):
        monkeypatch.setenv("REPCOUNT_THREADS", "1")
        single = run(capsys, "count", str(translation_dir))[1]
        monkeypatch.setenv("REPCOUNT_THREADS", "4")
        assert run(capsys, "count", str(translation_dir))[1] == single

    def test_empty_directory(self, capsys, tmp_path):
        code, _, err = run(capsys, "count", str(tmp_path))
        assert code == 2
        assert "no flow frames found" in err

    def test_missing_masks_warn_once(self, capsys, tmp_path, translation_dir):
        for f in sorted(translation_dir.glob("frame_*.flo"))[:120]:
            (tmp_path / f.name).write_bytes(f.read_bytes())
        code, out, err = run(capsys, "count", str(tmp_path))
        assert code == 0
        assert err.count("warning") == 1
        assert json.loads(out)["count"] > 0

    def test_bad_frame_names_file(self, capsys, tmp_path):
        (tmp_path / "frame_00000.flo").write_bytes(b"\x00" * 20)
        code, _, err = run(capsys, "count", str(tmp_path))
        assert code == 2
        assert "frame_00000.flo" in err

    def test_config_override(self, capsys, tmp_path, translation_dir):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"path_mode": "greedy", "mean_window": 5}))
        code, out, _ = run(capsys, "count", str(translation_dir), "--config", str(cfg))
        assert code == 0
        assert 9 <= json.loads(out)["count"] <= 11

    def test_config_unknown_key(self, capsys, tmp_path, translation_dir):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"omega": 6}))
        code, _, err = run(capsys, "count", str(translation_dir), "--config", str(cfg))
        assert code == 2
        assert "omega" in err


class TestSynth:
    def test_all(self, capsys, tmp_path):
        code, _, _ = run(capsys, "synth", "--all", "--frames", "80", "--width", "24", "--height", "24", "--out", str(tmp_path))
        assert code == 0
        dirs = [d for d in tmp_path.iterdir() if d.is_dir()]
        assert len(dirs) == 18
        assert all((d / "truth.json").is_file() for d in dirs)

    def test_truth_count(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "synth", "--case", "rotation/oscillating/frontal", "--period", "30", "--frames", "300",
            "--width", "24", "--height", "24", "--out", str(tmp_path),
        )
        assert code == 0
        truth = json.loads((tmp_path / "truth.json").read_text())
        assert truth["truth_count"] == 10
        assert len(list(tmp_path.glob("frame_*.flo"))) == 300
        mask = read_mask((tmp_path / "mask_00000.pgm").read_bytes())
        assert mask.shape == (24, 24)

    def test_invalid_case(self, capsys, tmp_path):
        code, _, err = run(capsys, "synth", "--case", "spin/oscillating/side", "--out", str(tmp_path))
        assert code == 2
        assert "rotation/oscillating/frontal" in err

    def test_invalid_params(self, capsys, tmp_path):
        code, _, err = run(capsys, "synth", "--case", "rotation/oscillating/side", "--period", "20", "--frames", "40", "--out", str(tmp_path))
        assert code == 2
        assert "n_frames" in err

    def test_unwritable(self, capsys, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code, _, _ = run(capsys, "synth", "--all", "--out", str(blocker / "sub"))
        assert code == 2

    def test_annotations(self, capsys, tmp_path):
        code, out, _ = run(capsys, "synth", "--annotations", "5", "--seed", "3", "--out", str(tmp_path))
        assert code == 0
        assert len(json.loads(out)["items"]) == 5


class TestSpectrum:
    def read_paths(self, prefix):
        rows = {}
        for line in (prefix.parent / (prefix.name + "_paths.csv")).read_text().splitlines():
            name, *values = line.split(",")
            rows[name] = np.array([float(v) for v in values])
        return rows

    def test_sinusoid_band(self, capsys, tmp_path):
        src = write_csv(tmp_path / "sine.csv", sinusoid(16, 512))
        prefix = tmp_path / "out" / "sine"
        code, out, _ = run(capsys, "spectrum", str(src), "--out", str(prefix))
        assert code == 0
        data = (prefix.with_suffix(".pgm")).read_bytes()
        header, rest = data.split(b"\n255\n", 1)
        width, height = map(int, header.split()[1:3])
        img = np.frombuffer(rest, dtype=np.uint8).reshape(height, width)
        # the brightest row in the middle of the image is a single horizontal band
        bright_rows = np.argmax(img[:, 150:362], axis=0)
        assert np.ptp(bright_rows) == 0
        ridge = self.read_paths(prefix)["max_power_ridge"]
        assert np.all(ridge[150:362] == bright_rows[0])
        assert json.loads(out)["n_times"] == 512

    def test_chirp_steps_down(self, capsys, tmp_path):
        src = write_csv(tmp_path / "chirp.csv", two_segment_chirp(32))
        prefix = tmp_path / "chirp"
        assert run(capsys, "spectrum", str(src), "--out", str(prefix))[0] == 0
        ridge = self.read_paths(prefix)["max_power_ridge"]
        assert np.median(ridge[300:450]) < np.median(ridge[60:210]) - 5

    def test_flow_directory(self, capsys, tmp_path, translation_dir):
        prefix = tmp_path / "flow"
        code, out, _ = run(capsys, "spectrum", str(translation_dir), "--channel", "Fx", "--out", str(prefix))
        assert code == 0
        assert json.loads(out)["channel"] == "Fx"
        rows = prefix.with_suffix(".csv").read_text().splitlines()
        assert rows[0].startswith("time_s,") and len(rows) == 201

    def test_one_sample(self, capsys, tmp_path):
        src = write_csv(tmp_path / "one.csv", [1.0])
        code, _, err = run(capsys, "spectrum", str(src), "--out", str(tmp_path / "x"))
        assert code == 2
        assert "signal too short" in err

    def test_unparseable(self, capsys, tmp_path):
        src = tmp_path / "bad.csv"
        src.write_text("value\n1.0\nabc\n")
        code, _, _ = run(capsys, "spectrum", str(src), "--out", str(tmp_path / "x"))
        assert code == 2


class TestEval:
    def test_idealized(self, capsys, tmp_path):
        out_path = tmp_path / "ideal.json"
        code, _, _ = run(capsys, "eval", "idealized", "--n", "8", "--seed", "7", "--out", str(out_path))
        assert code == 0
        payload = json.loads(out_path.read_text())
        assert {"fourier", "wavelet", "tally"} <= set(payload)
        assert sum(payload["tally"].values()) == 8
        assert out_path.with_suffix(".txt").read_text().startswith("method")

    def test_idealized_deterministic(self, capsys):
        a = run(capsys, "eval", "idealized", "--n", "5", "--seed", "7")[1]
        b = run(capsys, "eval", "idealized", "--n", "5", "--seed", "7")[1]
        assert a == b and json.loads(a)["n"] == 5

    def test_cases(self, capsys, case_corpus):
        code, out, err = run(capsys, "eval", "cases", str(case_corpus))
        assert code == 0
        payload = json.loads(out)
        assert len(payload["per_case"]) == 18
        assert "# selected" in err

    def test_acceleration(self, capsys, tmp_path):
        assert run(capsys, "synth", "--annotations", "4", "--seed", "1", "--out", str(tmp_path))[0] == 0
        code, out, _ = run(capsys, "eval", "acceleration", str(tmp_path))
        assert code == 0
        assert "wavelet_degradation" in json.loads(out)

    def test_bogus(self, capsys):
        code, _, err = run(capsys, "eval", "bogus")
        assert code == 2
        assert "usage" in err

    def test_missing_corpus(self, capsys, tmp_path):
        code, _, _ = run(capsys, "eval", "cases", str(tmp_path / "nope"))
        assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "repcount", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("repcount")
