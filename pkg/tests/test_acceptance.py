"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``)."""

import contextlib
import os
import shlex
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from memlab import analysis, cli, edits, imagecore as ic, labels, metrics, synth
from memlab.analysis import DeltaStats
from memlab.edits import EditOp, EditRecipe
from memlab.errors import ProtocolError
from memlab.imagecore import Encoding, Image, Mask
from memlab.labels import MemClass, SplitSpec
from memlab.predictor import PredictorHandle, predict_batch

ADAPTER_SRC = Path(__file__).resolve().parents[1] / "adapter" / "src"


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[ACCEPT] {name}: FAIL")
        raise
    print(f"[ACCEPT] {name}: PASS")


# ---------------------------------------------------------------------------
# 1. color pipeline


def _lab_oracle(r, g, b):
    def dec(v):
        v = v / 255.0
        return v / 12.92 if v <= 0.04045 else ((v + 0.055) / 1.055) ** 2.4

    rl, gl, bl = dec(r), dec(g), dec(b)
    x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl
    y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl
    z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl

    def f(t):
        d = 6.0 / 29.0
        return t ** (1.0 / 3.0) if t > d ** 3 else t / (3 * d * d) + 4.0 / 29.0

    fx, fy, fz = f(x / 0.95047), f(y / 1.0), f(z / 1.08883)
    return 116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)


def test_color_pipeline_roundtrip_and_anchors():
    with criterion("color pipeline"):
        start = time.monotonic()
        idx = np.arange(0, 1 << 24, 17, dtype=np.int64)
        rgb = np.stack([(idx >> 16) & 255, (idx >> 8) & 255, idx & 255],
                       axis=-1).astype(np.uint8)
        img = Image.from_array(rgb.reshape(-1, 1, 3), Encoding.SRGB8)
        back = ic.lab_to_srgb(ic.srgb_to_lab(img))
        max_err = np.abs(back.data.astype(np.int64) - img.data.astype(np.int64)).max()
        assert max_err <= 1, f"round trip error {max_err} code values"

        white = ic.srgb_to_lab(
            Image.from_array(np.full((1, 1, 3), 255, np.uint8), Encoding.SRGB8)
        ).data[0, 0]
        assert white[0] == pytest.approx(100.0, abs=0.05)
        assert abs(white[1]) < 0.01 and abs(white[2]) < 0.01

        red = ic.srgb_to_lab(
            Image.from_array(np.array([[[255, 0, 0]]], np.uint8), Encoding.SRGB8)
        ).data[0, 0]
        assert np.allclose(red, _lab_oracle(255, 0, 0), atol=1e-9)
        assert red == pytest.approx((53.24, 80.09, 67.20), abs=0.05)

        elapsed = time.monotonic() - start
        assert elapsed < 30.0, f"color pipeline took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 2. operator identities


def test_operator_identities(corpus):
    with criterion("operator identities"):
        start = time.monotonic()
        _, img = corpus[1]
        assert np.array_equal(edits.sharpen(img, amount=0.0).data, img.data)
        assert np.array_equal(edits.increase_contrast(img, strength=1.0).data,
                              img.data)
        assert np.array_equal(edits.vibrance(img, amount=0.0).data, img.data)
        assert np.array_equal(edits.vignette(img, strength=0.0).data, img.data)
        clar = edits.clarity(img, amount=0.0)
        assert np.abs(clar.data.astype(int) - img.data.astype(int)).max() <= 1
        assert time.monotonic() - start < 10.0


# ---------------------------------------------------------------------------
# 3. monotone metric effects


def test_monotone_metric_effects(corpus):
    with criterion("monotone metric effects"):
        assert len(corpus) == 20
        for name, img in corpus:
            zero_mask = Mask.from_array(np.zeros((img.height, img.width)))
            grad = metrics.mean_gradient(img)
            assert metrics.mean_gradient(edits.sharpen(img)) > grad, name
            blurred = edits.blur_background(img, zero_mask, sigma=4.0)
            assert metrics.mean_gradient(blurred) < grad, name

            mean, _ = metrics.intensity_stats(img)
            vmean, _ = metrics.intensity_stats(edits.vignette(img, strength=0.5))
            assert vmean < mean, name

            volume = metrics.gamut_volume(img)
            assert volume > 0, f"{name} is not chromatic"
            assert metrics.gamut_volume(edits.grayscale(img)) < 0.01 * volume, name

            wlf = metrics.wlf_contrast(img)
            assert metrics.wlf_contrast(
                edits.increase_contrast(img, 1.5)) > wlf, name


# ---------------------------------------------------------------------------
# 4. class-statistics ordering surrogate


def test_class_statistics_ordering_surrogate(corpus):
    with criterion("class statistics ordering"):
        base = [img for _, img in corpus[:8]]
        high = [edits.sharpen(edits.increase_contrast(img, 1.5)) for img in base]
        low = []
        for img in base:
            soft = ic.gaussian_blur(img, 2.0)
            luma = metrics.luma_field(soft).values[:, :, None]
            faded = ic.round_to_u8(0.5 * soft.data.astype(float) + 0.5 * luma)
            low.append(Image.from_array(faded, Encoding.SRGB8))

        def class_means(imgs):
            recs = [metrics.stats_record(i) for i in imgs]
            return (
                float(np.mean([r.mean_grad for r in recs])),
                float(np.mean([r.wlf for r in recs])),
                float(np.mean([r.gamut_volume for r in recs])),
                float(np.mean([r.std for r in recs])),
            )

        g_hi, w_hi, v_hi, s_hi = class_means(high)
        g_md, w_md, v_md, s_md = class_means(base)
        g_lo, w_lo, v_lo, s_lo = class_means(low)
        assert g_hi > g_md > g_lo
        assert w_hi > w_md > w_lo
        assert v_hi > v_lo
        assert s_hi > s_lo


# ---------------------------------------------------------------------------
# 5. statistics oracles


def _percentile_oracle(values, p):
    data = sorted(values)
    rank = p / 100.0 * (len(data) - 1)
    i = int(np.floor(rank))
    t = rank - i
    if i + 1 >= len(data):
        return data[-1]
    return data[i] + t * (data[i + 1] - data[i])


def _delta_oracle(original, edited):
    deltas = sorted(e - o for o, e in zip(original, edited))
    mean = sum(deltas) / len(deltas)
    var = sum((d - mean) ** 2 for d in deltas) / len(deltas)
    return (mean, var ** 0.5, _percentile_oracle(deltas, 50),
            _percentile_oracle(deltas, 5), _percentile_oracle(deltas, 95))


def test_statistics_oracles():
    with criterion("statistics oracles"):
        rng = np.random.default_rng(101)

        for _ in range(1000):
            values = rng.random(int(rng.integers(1, 50))).tolist()
            p = float(rng.uniform(0, 100))
            assert labels.percentile(values, p) == pytest.approx(
                _percentile_oracle(values, p), abs=1e-9)

        for _ in range(1000):
            n = int(rng.integers(1, 50))
            orig = rng.random(n).tolist()
            edit = rng.random(n).tolist()
            got = analysis.delta_stats(orig, edit)
            mean, std, med, p5, p95 = _delta_oracle(orig, edit)
            assert got.mean == pytest.approx(mean, abs=1e-9)
            assert got.std == pytest.approx(std, abs=1e-9)
            assert got.median == pytest.approx(med, abs=1e-9)
            assert got.p5 == pytest.approx(p5, abs=1e-9)
            assert got.p95 == pytest.approx(p95, abs=1e-9)

            rev = analysis.delta_stats(edit, orig)
            assert (got.mean, got.median, got.p5, got.p95) \
                == (-rev.mean, -rev.median, -rev.p95, -rev.p5)

        for _ in range(1000):
            size = int(rng.integers(2, 30))
            keys = [f"k{j}" for j in range(size)]
            predicted = {k: float(v) for k, v in zip(keys, rng.random(size))}
            reference = {k: float(v) for k, v in zip(keys, rng.random(size))}
            n = int(rng.integers(1, size + 1))
            chosen, max_err, _ = analysis.select_reliable_subset(
                predicted, reference, n)
            oracle = sorted(
                keys, key=lambda k: (abs(predicted[k] - reference[k]), k))[:n]
            assert sorted(chosen) == sorted(oracle)
            errs = sorted(abs(predicted[k] - reference[k]) for k in keys)
            assert max_err <= errs[n - 1] + 1e-15


# ---------------------------------------------------------------------------
# 6. binning


def test_binning_fractions_and_monotonicity():
    with criterion("binning"):
        rng = np.random.default_rng(55)
        scores = {f"im{i:05d}": float(v) for i, v in enumerate(rng.random(10_000))}
        labeled, thresholds = labels.bin_dataset(scores, SplitSpec(0.1, 0.1))
        counts = {c: 0 for c in MemClass}
        for _, c in labeled.values():
            counts[c] += 1
        assert counts[MemClass.LOW] / 10_000 == pytest.approx(0.10, abs=0.01)
        assert counts[MemClass.MED] / 10_000 == pytest.approx(0.80, abs=0.01)
        assert counts[MemClass.HIGH] / 10_000 == pytest.approx(0.10, abs=0.01)

        grid = np.linspace(0.0, 1.0, 10_001)
        classes = [labels.classify(float(s), thresholds) for s in grid]
        assert all(b >= a for a, b in zip(classes, classes[1:]))


# ---------------------------------------------------------------------------
# 7. face preparation


def test_faceprep_batch(tmp_path):
    with criterion("face preparation"):
        from memlab import faceprep

        src = tmp_path / "raw"
        synth.write_corpus(src, n=100, size=150, seed=13)
        cfg = faceprep.PrepConfig()
        rows = faceprep.prepare_dataset(src, tmp_path / "prep", cfg)
        assert len(rows) == 100
        assert all(r["status"] == "ok" for r in rows)
        fill = np.array(cfg.fill)
        for row in rows:
            img = ic.decode_image(tmp_path / "prep" / row["output"])
            assert (img.width, img.height) == (128, 128)
            for y in (0, -1):
                for x in (0, -1):
                    assert np.abs(img.data[y, x].astype(int) - fill).max() <= 1

        mask = faceprep.make_oval_mask(512, 512, cfg)
        frac = float((mask.weights == 1.0).mean())
        expected = np.pi * cfg.axis_frac_x * cfg.axis_frac_y / 4.0
        assert frac == pytest.approx(expected, rel=0.02)


# ---------------------------------------------------------------------------
# 8. end-to-end experiment


def _run_experiment(images, out, workers):
    code = cli.main([
        "experiment", "--images", str(images), "--recipes", "defaults",
        "--predictor", "stub", "--out", str(out), "--workers", str(workers),
    ])
    assert code == 0


def _artifact_bytes(out):
    files = sorted(
        p.relative_to(out)
        for p in out.rglob("*")
        if p.is_file() and p.suffix in (".csv", ".svg")
    )
    return {str(rel): (out / rel).read_bytes() for rel in files}


def test_end_to_end_experiment(tmp_path):
    with criterion("end-to-end experiment"):
        images = tmp_path / "imgs"
        synth.write_corpus(images, n=50, size=128, seed=21)

        start = time.monotonic()
        _run_experiment(images, tmp_path / "run1", workers=1)
        elapsed = time.monotonic() - start
        assert elapsed < 60.0, f"experiment took {elapsed:.1f}s"

        summary = (tmp_path / "run1" / "summary.csv").read_text().strip().split("\n")
        assert len(summary) == 10  # header + 9 recipes
        svgs = sorted((tmp_path / "run1").rglob("*.svg"))
        assert len(svgs) == 18
        import xml.etree.ElementTree as ET
        for svg in svgs:
            ET.parse(svg)  # well-formed XML

        _run_experiment(images, tmp_path / "run2", workers=1)
        _run_experiment(images, tmp_path / "run8", workers=8)
        a = _artifact_bytes(tmp_path / "run1")
        b = _artifact_bytes(tmp_path / "run2")
        c = _artifact_bytes(tmp_path / "run8")
        assert a == b, "two identical runs differ"
        assert a == c, "worker count changed the output"

        rows = {line.split(",")[0]: line for line in summary[1:]}
        sharpen_frac = float(rows["Sharpening"].split(",")[6])
        assert sharpen_frac >= 0.9


# ---------------------------------------------------------------------------
# 9. reference stat-row formatting


def test_reference_row_formatting():
    with criterion("summary row formatting"):
        fixture = [
            ("Sharpening", 0.023, 0.126, 0.015, -0.169, 0.234,
             "Sharpening,+0.023,0.126,+0.015,-0.169,0.234"),
            ("Background blurring", -0.008, 0.133, -0.017, -0.220, 0.215,
             "Background blurring,-0.008,0.133,-0.017,-0.220,0.215"),
            ("BG blurring + darkening", -0.049, 0.136, -0.057, -0.261, 0.175,
             "BG blurring + darkening,-0.049,0.136,-0.057,-0.261,0.175"),
            ("Grayscale", -0.023, 0.133, -0.037, -0.244, 0.203,
             "Grayscale,-0.023,0.133,-0.037,-0.244,0.203"),
            ("Contrast increasing", -0.007, 0.131, -0.016, -0.209, 0.215,
             "Contrast increasing,-0.007,0.131,-0.016,-0.209,0.215"),
            ("Color temperature 5000K", -0.002, 0.135, -0.009, -0.215, 0.220,
             "Color temperature 5000K,-0.002,0.135,-0.009,-0.215,0.220"),
            ("Vibrance (Saturation)", 0.005, 0.129, -0.004, -0.195, 0.220,
             "Vibrance (Saturation),+0.005,0.129,-0.004,-0.195,0.220"),
            ("Clarity (Structure)", -0.002, 0.133, -0.009, -0.211, 0.220,
             "Clarity (Structure),-0.002,0.133,-0.009,-0.211,0.220"),
            ("Vignetting", -0.024, 0.140, -0.029, -0.246, 0.209,
             "Vignetting,-0.024,0.140,-0.029,-0.246,0.209"),
        ]
        for tool, mean, std, median, p5, p95, expected in fixture:
            st_ = DeltaStats(mean=mean, std=std, median=median, p5=p5, p95=p95,
                             n=2000, direction_positive_frac=0.5)
            assert analysis.format_summary_row(tool, st_).startswith(expected)


# ---------------------------------------------------------------------------
# 10. adapter conformance (secondary component)


def _adapter_command(*args) -> str:
    parts = ["env", f"PYTHONPATH={ADAPTER_SRC}", sys.executable,
             "-m", "memadapter", *args]
    return " ".join(shlex.quote(p) for p in parts)


def test_adapter_protocol_conformance(tmp_path):
    with criterion("adapter conformance"):
        paths = []
        for i in range(5):
            p = tmp_path / f"img{i}.png"
            ic.encode_image(
                Image.from_array(np.full((8, 8, 3), 40 * i, np.uint8),
                                 Encoding.SRGB8), p)
            paths.append(p)

        # driven through the primary's predictor machinery
        handle = PredictorHandle.command(_adapter_command("--stub"))
        table = predict_batch(handle, paths)
        assert [table[f"img{i}"] for i in range(5)] == [0.5] * 5

        # order preserved across batch boundaries
        handle2 = PredictorHandle.command(
            _adapter_command("--stub", "--batch-size", "2"))
        assert predict_batch(handle2, paths) == table

        # a bad path yields the ERROR sentinel: line counts stay aligned and
        # the primary rejects the sentinel as a protocol violation
        bad = tmp_path / "missing.png"
        with pytest.raises(ProtocolError, match="unparsable"):
            predict_batch(handle, paths[:2] + [bad])

        proc = subprocess.run(
            shlex.split(_adapter_command("--stub")),
            input="".join(f"{p.resolve()}\n" for p in (paths[0], bad, paths[1])),
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        lines = proc.stdout.splitlines()
        assert len(lines) == 3
        assert lines[0] == f"{paths[0].resolve()}\t0.5"
        assert lines[1] == f"{bad.resolve()}\tERROR"
        assert lines[2] == f"{paths[1].resolve()}\t0.5"
        scores = [float(l.split("\t")[1]) for l in (lines[0], lines[2])]
        assert all(0.0 <= s <= 1.0 for s in scores)
