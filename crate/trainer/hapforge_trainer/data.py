"""Reads a built dataset directory into training tensors."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .archive import read_v2hs


def read_rgb(path) -> np.ndarray:
    """RGB image as float32 in [0, 1], shape (3, H, W)."""
    img = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64) / 255.0
    return img.astype(np.float32).transpose(2, 0, 1)


def read_height(path) -> np.ndarray:
    path = Path(path)
    scale = None
    for line in path.with_suffix(".scale").read_text().splitlines():
        if line.strip().startswith("scale="):
            scale = float(line.strip()[len("scale="):])
    if scale is None:
        raise ValueError(f"{path}: sidecar has no scale entry")
    return np.asarray(Image.open(path), dtype=np.float64) * scale


def spectrogram_image(spec: np.ndarray, reference: float, db_floor: float) -> np.ndarray:
    mag = np.abs(spec)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / reference)
    px = np.clip((db - db_floor) / -db_floor, 0.0, 1.0)
    return np.where(mag > 0, px, 0.0)


def spectrogram_layout(manifest: dict, sample_rate_hz: float) -> dict:
    cfg = manifest["config"]
    stft = cfg["stft"]
    n = cfg["trace_window"]
    frames = 1 + -(-(n - stft["window_length"]) // stft["hop_length"])
    return {
        "bins": stft["fft_length"] // 2 + 1,
        "frames": frames,
        "stft": stft,
        "db_floor": cfg["db_floor"],
        "reference_magnitude": cfg["spectrogram_reference"],
        "original_length": n,
        "sample_rate_hz": sample_rate_hz,
    }


def trace_rate(path) -> float:
    rows = Path(path).read_text().splitlines()[1:3]
    dt = float(rows[1].split(",")[0]) - float(rows[0].split(",")[0])
    rate = 1.0 / dt
    return float(round(rate)) if abs(rate - round(rate)) < 1e-6 else rate


@dataclass
class Split:
    ids: list
    x: torch.Tensor
    s: torch.Tensor
    h: torch.Tensor

    def __len__(self):
        return len(self.ids)


def load_manifest(dataset_dir) -> dict:
    return json.loads((Path(dataset_dir) / "manifest.json").read_text())


def load_split(dataset_dir, split: str, size: int = 64, limit=None) -> Split:
    """Visual inputs and both targets of one split, all scaled to [-1, 1] at `size`×`size`."""
    root = Path(dataset_dir)
    manifest = load_manifest(root)
    cfg = manifest["config"]
    records = [r for r in manifest["records"] if r["split"] == split][:limit]
    if not records:
        raise ValueError(f"split `{split}` is empty")
    xs, ss, hs = [], [], []
    for r in records:
        xs.append(torch.from_numpy(read_rgb(root / r["visual_path"])))
        img = spectrogram_image(read_v2hs(root / r["spectrogram_path"]), cfg["spectrogram_reference"], cfg["db_floor"])
        ss.append(torch.from_numpy(img.astype(np.float32))[None])
        hs.append(torch.from_numpy(read_height(root / r["height_path"]).astype(np.float32))[None])
    resize = lambda t: F.interpolate(t, size=(size, size), mode="bilinear", align_corners=False)
    x = resize(torch.stack(xs)) * 2 - 1
    s = resize(torch.stack(ss)).clamp(0, 1) * 2 - 1
    h = resize(torch.stack(hs)).clamp(0, 1) * 2 - 1
    return Split([r["id"] for r in records], x, s, h)
