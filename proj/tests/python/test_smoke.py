# Copyright 2026 The noisesim Authors
# License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
"""Smoke tests for the python bindings and the CLI entry point."""

import json
import os
import subprocess

import numpy as np
import pytest

import noisesim


def tone(freq, seconds=1.0, sr=16000, amp=0.3):
    t = np.arange(int(seconds * sr)) / sr
    return amp * np.sin(2 * np.pi * freq * t)


def test_stft_istft_round_trip():
    rng = np.random.default_rng(7)
    x = 0.4 * rng.standard_normal(16000)
    mag, phase = noisesim.stft(x)
    assert mag.shape[0] == 129
    assert mag.shape == phase.shape
    y = noisesim.istft(mag, phase)
    n = min(len(x), len(y))
    err = np.linalg.norm(x[256 : n - 256] - y[256 : n - 256]) / np.linalg.norm(
        x[256 : n - 256]
    )
    assert err < 1e-3


def test_segment_shapes():
    mag, _ = noisesim.stft(tone(440.0, 2.0))
    segs = noisesim.segment(mag)
    assert all(s["data"].shape == (129, 128) for s in segs)
    assert sum(s["valid_frames"] for s in segs) == mag.shape[1]
    assert segs[-1]["padded_tail"] in (True, False)


def test_snr_and_si_snr():
    clean = tone(500.0)
    rng = np.random.default_rng(3)
    noise = rng.standard_normal(clean.size)
    noise *= np.linalg.norm(clean) / np.linalg.norm(noise) * 10 ** (-10.0 / 20.0)
    noisy = clean + noise
    assert noisesim.estimate_snr(noisy, clean) == pytest.approx(10.0, abs=1e-9)
    base = noisesim.si_snr(noisy, clean)
    assert noisesim.si_snr(3.0 * noisy, clean) == pytest.approx(base, abs=1e-6)


def test_film_identity():
    rng = np.random.default_rng(5)
    feats = rng.standard_normal((4, 6, 5))
    out = noisesim.film_apply(feats, np.ones(4), np.zeros(4))
    np.testing.assert_array_equal(out, feats)
    shifted = noisesim.film_apply(feats, np.zeros(4), 2.5 * np.ones(4))
    assert np.all(shifted == 2.5)


def test_perturb_embedding_semantics():
    n = np.linspace(-1, 1, 64)
    same = noisesim.perturb_embedding(n, 0.0, seed=9)
    np.testing.assert_array_equal(same, n)
    a = noisesim.perturb_embedding(n, 2.0, seed=9)
    b = noisesim.perturb_embedding(n, 2.0, seed=9)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, noisesim.perturb_embedding(n, 2.0, seed=10))


def test_wav_and_manifest(tmp_path):
    root = tmp_path / "corpus"
    for kind in ("alpha", "beta"):
        (root / kind).mkdir(parents=True)
        for i in range(3):
            noisesim.write_wav(
                str(root / kind / f"utt{i}_snr{5 * i}.wav"), tone(300.0 + 100 * i, 1.2)
            )
    out = tmp_path / "manifest.jsonl"
    count = noisesim.build_manifest(str(root), "target_noisy", str(out))
    assert count == 6
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    assert {e["noise_type"] for e in lines} == {"alpha", "beta"}
    assert lines[0]["domain"] == "target_noisy"

    reduced = tmp_path / "reduced.jsonl"
    kept = noisesim.exclude_from_test(str(out), str(out), str(reduced))
    assert kept == 0


def test_tiny_training_pipeline(tmp_path):
    rng = np.random.default_rng(11)
    sr = 16000
    clean_dir = tmp_path / "clean"
    noisy_dir = tmp_path / "noisy"
    clean_dir.mkdir()
    noisy_dir.mkdir()
    for i in range(3):
        noisesim.write_wav(str(clean_dir / f"c{i}.wav"), tone(400.0 + 80 * i, 1.1))
        speech = tone(500.0 + 80 * i, 1.1)
        noise = rng.standard_normal(speech.size)
        noise *= np.linalg.norm(speech) / np.linalg.norm(noise) * 10 ** (-5.0 / 20.0)
        noisesim.write_wav(str(noisy_dir / f"n{i}.wav"), speech + 0.5 * noise)

    clean_m = tmp_path / "clean.jsonl"
    noisy_m = tmp_path / "noisy.jsonl"
    noisesim.build_manifest(str(clean_dir), "source_clean", str(clean_m))
    noisesim.build_manifest(str(noisy_dir), "target_noisy", str(noisy_m))

    bundle = tmp_path / "bundle.nsa"
    steps = noisesim.train_gan(
        str(clean_m),
        str(noisy_m),
        out=str(bundle),
        epochs=1,
        base_channels=4,
        res_blocks=2,
        d_channels=4,
        pcl_patches=8,
        pcl_negatives=16,
        seed=1,
    )
    assert steps == 3
    assert bundle.exists()

    sim_dir = tmp_path / "sim"
    pairs = noisesim.simulate_dataset(
        str(bundle), str(clean_m), str(noisy_m), str(sim_dir), sigma=0.5, seed=2
    )
    assert pairs == 3
    assert (sim_dir / "pairs.jsonl").exists()

    model = tmp_path / "se.nsa"
    noisesim.adapt_se(str(sim_dir / "pairs.jsonl"), str(model), epochs=1, base_channels=8)
    assert model.exists()

    # evaluate against the simulated pairs themselves
    test_m = tmp_path / "test.jsonl"
    entries = []
    for line in (sim_dir / "pairs.jsonl").read_text().splitlines():
        pair = json.loads(line)
        entries.append(
            {
                "utterance_id": pair["clean_id"],
                "audio_path": pair["simulated_waveform_path"],
                "domain": "target_noisy",
                "clean_path": pair["clean_waveform_path"],
            }
        )
    test_m.write_text("".join(json.dumps(e) + "\n" for e in entries))
    report = noisesim.evaluate(str(model), str(test_m))
    assert report["evaluated"] == 3
    assert len(report["buckets"]) == 4
    assert np.isfinite(report["mean_si_snr"])


def test_silhouette():
    rng = np.random.default_rng(13)
    a = rng.standard_normal((20, 8)) * 0.2
    b = rng.standard_normal((20, 8)) * 0.2
    a[:, 0] += 5.0
    b[:, 0] -= 5.0
    x = np.vstack([a, b])
    labels = [0] * 20 + [1] * 20
    assert noisesim.silhouette(x, labels) > 0.8


def test_cli_available():
    cli = os.environ.get("NOISESIM_CLI")
    if not cli:
        pytest.skip("NOISESIM_CLI not set")
    out = subprocess.run([cli, "--help"], capture_output=True, text=True, check=True)
    for sub in ("data", "train-gan", "simulate", "adapt-se", "evaluate", "analyze"):
        assert sub in out.stdout
