import json

import numpy as np
import pytest
from PIL import Image

from hapforge_trainer.archive import write_v2hs


def make_dataset(root, n_train=16, n_val=2, n_test=2, size=64, seed=0):
    """Minimal dataset directory in the layout the runtime builds."""
    rng = np.random.default_rng(seed)
    records = []
    for split, n in (("train", n_train), ("val", n_val), ("test", n_test)):
        for i in range(n):
            rid = f"{split}{i:03}"
            yy, xx = np.mgrid[0:size, 0:size] / size
            freq = 2 + i % 4
            h = 0.5 + 0.5 * np.sin(2 * np.pi * freq * xx + i) * np.cos(2 * np.pi * yy)
            rgb = np.stack([h * 0.7, h * 0.6, h * 0.5], axis=-1) + rng.normal(0, 0.01, (size, size, 3))
            for d in ("visual", "height", "spec", "trace"):
                (root / d).mkdir(exist_ok=True)
            Image.fromarray((np.clip(rgb, 0, 1) * 255).round().astype(np.uint8)).save(root / f"visual/{rid}.png")
            scale = float(h.max() / 65535)
            Image.fromarray((h / scale).round().astype(np.uint16)).save(root / f"height/{rid}.png")
            (root / f"height/{rid}.scale").write_text(f"scale={scale!r}\n")
            t = np.arange(240) / 60.0
            mu = 0.4 + 0.05 * np.sin(2 * np.pi * freq * t)
            (root / f"trace/{rid}.csv").write_text("time_s,mu\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, mu)))
            spec = np.fft.rfft(np.lib.stride_tricks.sliding_window_view(mu, 64)[::16] * np.hanning(64), axis=1).T
            write_v2hs(root / f"spec/{rid}.v2hs", spec)
            records.append({
                "id": rid, "class_id": "c", "raw_id": rid, "split": split,
                "visual_path": f"visual/{rid}.png", "height_path": f"height/{rid}.png",
                "trace_path": f"trace/{rid}.csv", "spectrogram_path": f"spec/{rid}.v2hs",
            })
    manifest = {
        "seed": seed,
        "config": {
            "stft": {"window_length": 64, "hop_length": 16, "window_kind": "hann", "fft_length": 64},
            "trace_window": 240, "db_floor": -80.0, "spectrogram_reference": 32.0,
        },
        "records": records,
    }
    (root / "manifest.json").write_text(json.dumps(manifest))
    return root


@pytest.fixture(scope="session")
def dataset(tmp_path_factory):
    return make_dataset(tmp_path_factory.mktemp("dataset"))
