import numpy as np
import pytest

import kfvio


def test_codec_roundtrip_matches_serialized_path():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, size=(48, 64), dtype=np.uint8)
    blob = kfvio.encode(img)
    assert len(blob) == 4 + (16 * 12 * 26 + 7) // 8
    decoded = kfvio.decode(blob)
    assert decoded.shape == img.shape
    np.testing.assert_array_equal(decoded, kfvio.btc_roundtrip(img, 4, 5))
    assert np.abs(decoded.astype(int) - img.astype(int)).max() <= 255


def test_bits_per_pixel():
    assert kfvio.btc_bits_per_pixel(4, 5) == pytest.approx(26 / 16)
    assert kfvio.btc_bits_per_pixel(1, 6) == 6


def test_so3_roundtrip():
    w = np.array([0.3, -0.2, 0.5])
    R = kfvio.so3_exp(w)
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(kfvio.so3_log(R), w, atol=1e-12)


def test_config_limits():
    cfg = kfvio.load_config("easy")
    assert (cfg.features_per_frame, cfg.horizon) == (35, 10)
    with pytest.raises(kfvio.KfvioError):
        kfvio.load_config(horizon=21)
    with pytest.raises(kfvio.KfvioError):
        kfvio.load_config({"no_such_key": 1})
    assert "MH_04" in kfvio.preset_names()


def test_model_ratios():
    text, model = kfvio.model()
    assert "Track store" in text
    rows = {r["block"]: r for r in model["memory"]}
    assert rows["Track store"]["saving"] == pytest.approx(5.44, rel=0.01)
    assert kfvio.backend_macs(200, 20) > 4 * kfvio.backend_macs(35, 10)


def test_short_oracle_run_is_deterministic():
    args = dict(dataset="synthetic:wave", config={"frontend": "oracle", "kf_policy": "rate:4"}, max_frames=40)
    report, traj = kfvio.run(**args)
    again, traj2 = kfvio.run(**args)
    assert report == again
    np.testing.assert_array_equal(traj, traj2)
    assert traj.shape[1] == len(kfvio.TRAJECTORY_COLUMNS)
    assert report["error"]["normalized_percent"] < 1.0
