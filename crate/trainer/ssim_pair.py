"""Writes the SSIM fixture pair and prints scikit-image's score for it."""

import sys
from pathlib import Path

import numpy as np
from PIL import Image
from skimage.metrics import structural_similarity

out = Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/ssim")
rng = np.random.default_rng(2024)
yy, xx = np.mgrid[0:48, 0:40]
a = 128 + 60 * np.sin(xx / 5.0) * np.cos(yy / 7.0) + rng.normal(0, 12, (48, 40))
b = 0.8 * a + 20 + rng.normal(0, 18, (48, 40))
a = np.clip(a, 0, 255).round().astype(np.uint8)
b = np.clip(b, 0, 255).round().astype(np.uint8)
out.mkdir(parents=True, exist_ok=True)
Image.fromarray(a).save(out / "a.png")
Image.fromarray(b).save(out / "b.png")
score = structural_similarity(
    a.astype(np.float64), b.astype(np.float64), data_range=255, gaussian_weights=True, sigma=1.5,
    use_sample_covariance=False,
)
print(repr(float(score)))
