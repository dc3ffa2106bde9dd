"""Writes generator archives and parity fixtures for the runtime."""

import json
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .archive import read_archive, write_archive, write_v2hs
from .data import read_rgb
from .model import UNet, unet_descriptor
from .train import Checkpoint

HEIGHT_ARCHIVE = "g_h.v2hw"
SPECTROGRAM_ARCHIVE = "g_s.v2hw"


def export_generator(net: UNet, path, name, output_kind, metadata=None):
    descriptor = unet_descriptor(net, name, output_kind, metadata)
    write_archive(path, descriptor, net.tensors())
    return descriptor


def load_generator(path) -> UNet:
    """Rebuilds a generator from an archive, checking the graph matches the network."""
    descriptor, tensors = read_archive(path)
    stem = next(n for n in descriptor["nodes"] if n["name"] == "stem")
    net = UNet(descriptor["input"]["channels"], descriptor["output"]["channels"], descriptor["input"]["height"], stem["out_channels"])
    if net.nodes() != descriptor["nodes"]:
        raise ValueError(f"{path}: graph does not match the generator architecture")
    net.load_tensors(tensors)
    return net.eval()


def network_input(png_path) -> np.ndarray:
    """Pixels exactly as the runtime feeds them: float32 `2·p − 1`."""
    return read_rgb(png_path) * np.float32(2.0) + np.float32(-1.0)


@torch.no_grad()
def reference_forward(net: UNet, x: np.ndarray) -> np.ndarray:
    """Forward pass in double precision on one (C, H, W) input; returns channel 0."""
    net64 = UNet(net.in_channels, net.out_channels, net.size, net.base_channels).double()
    net64.load_tensors({k: v.astype(np.float64) for k, v in net.tensors().items()})
    return net64(torch.from_numpy(x.astype(np.float64))[None])[0, 0].numpy()


def export(checkpoint: Checkpoint, out_dir, fixture_inputs=(), name_prefix="hapforge"):
    """Writes both archives and, for each input PNG, a parity case under `fixtures/`."""
    out = Path(out_dir)
    g_h, g_s = checkpoint.generators()
    meta = {"epoch": checkpoint.epoch, "lambda_l1": checkpoint.config.lambda_l1, **checkpoint.metadata}
    layout = meta.pop("spectrogram_layout")
    meta = {k: v for k, v in meta.items() if isinstance(v, (int, float, str, list))}
    export_generator(g_h, out / HEIGHT_ARCHIVE, f"{name_prefix}-height", {"kind": "height"}, meta)
    export_generator(g_s, out / SPECTROGRAM_ARCHIVE, f"{name_prefix}-spectrogram", {"kind": "spectrogram", "layout": layout}, meta)
    # Round-trip through the files so fixtures describe exactly what was written.
    g_h, g_s = load_generator(out / HEIGHT_ARCHIVE), load_generator(out / SPECTROGRAM_ARCHIVE)
    cases = []
    for i, src in enumerate(fixture_inputs):
        case = f"case{i:02}"
        (out / "fixtures").mkdir(parents=True, exist_ok=True)
        Image.open(src).convert("RGB").save(out / "fixtures" / f"{case}_input.png")
        x = network_input(out / "fixtures" / f"{case}_input.png")
        write_v2hs(out / "fixtures" / f"{case}_h.v2hs", reference_forward(g_h, x))
        write_v2hs(out / "fixtures" / f"{case}_s.v2hs", reference_forward(g_s, x))
        cases.append({"case": case, "source": Path(src).name})
    if cases:
        (out / "fixtures" / "cases.json").write_text(json.dumps(cases, indent=2) + "\n")
    return cases
