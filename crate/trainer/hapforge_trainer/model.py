"""Generator and discriminator networks, and their runtime graph descriptors."""

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

SUPPORTED_OPS = frozenset(
    {"conv2d", "conv_transpose2d", "instance_norm", "relu", "leaky_relu", "tanh", "concat", "pad"}
)
INPUT = "input"
LEAK = 0.2
NORM_EPS = 1e-5


class ExportError(ValueError):
    pass


class UNet(nn.Module):
    """Encoder-decoder generator with skip connections.

    Layer names match the runtime graph: tensor `down2.weight` belongs to node
    `down2`, and so on.
    """

    def __init__(self, in_channels=3, out_channels=1, size=64, base_channels=8):
        super().__init__()
        if size % 16:
            raise ValueError(f"size {size} is not divisible by 16")
        c = base_channels
        self.in_channels, self.out_channels, self.size, self.base_channels = in_channels, out_channels, size, c
        self.stem = nn.Conv2d(in_channels, c, 3)
        enc = [(c, 2 * c), (2 * c, 4 * c), (4 * c, 8 * c), (8 * c, 8 * c)]
        for d, (cin, cout) in enumerate(enc, start=1):
            setattr(self, f"down{d}", nn.Conv2d(cin, cout, 4, 2, 1))
        skips = [c, 2 * c, 4 * c, 8 * c]
        channels = 8 * c
        for d in range(4, 0, -1):
            setattr(self, f"up{d}", nn.ConvTranspose2d(channels, skips[d - 1], 4, 2, 1))
            channels = 2 * skips[d - 1]
        self.head = nn.Conv2d(channels, out_channels, 3)

    def forward(self, x):
        e = [F.leaky_relu(self.stem(F.pad(x, (1, 1, 1, 1), mode="reflect")), LEAK)]
        for d in range(1, 5):
            y = getattr(self, f"down{d}")(e[-1])
            if d < 4:
                y = F.instance_norm(y, eps=NORM_EPS)
            e.append(F.leaky_relu(y, LEAK))
        y = e[4]
        for d in range(4, 0, -1):
            u = F.relu(F.instance_norm(getattr(self, f"up{d}")(y), eps=NORM_EPS))
            y = torch.cat([u, e[d - 1]], dim=1)
        return torch.tanh(self.head(F.pad(y, (1, 1, 1, 1), mode="reflect")))

    def nodes(self):
        """Runtime graph nodes, in execution order."""
        c = self.base_channels
        out = []

        def node(name, inputs, op, **fields):
            out.append({"name": name, "inputs": list(inputs), "op": op, **fields})
            return name

        def conv(name, src, cin, cout, k, s, p, op="conv2d"):
            extra = {"output_padding": 0} if op == "conv_transpose2d" else {}
            return node(name, [src], op, in_channels=cin, out_channels=cout, kernel=k, stride=s, padding=p,
                        weight=f"{name}.weight", bias=f"{name}.bias", **extra)

        def norm(name, src, ch):
            return node(name, [src], "instance_norm", channels=ch, eps=NORM_EPS, weight=None, bias=None)

        node("stem_pad", [INPUT], "pad", mode="reflect", amount=[1, 1, 1, 1])
        conv("stem", "stem_pad", self.in_channels, c, 3, 1, 0)
        prev = node("e0", ["stem"], "leaky_relu", alpha=LEAK)
        enc = [(c, 2 * c), (2 * c, 4 * c), (4 * c, 8 * c), (8 * c, 8 * c)]
        for d, (cin, cout) in enumerate(enc, start=1):
            y = conv(f"down{d}", prev, cin, cout, 4, 2, 1)
            if d < 4:
                y = norm(f"down{d}_norm", y, cout)
            prev = node(f"e{d}", [y], "leaky_relu", alpha=LEAK)
        skips = [c, 2 * c, 4 * c, 8 * c]
        channels = 8 * c
        for d in range(4, 0, -1):
            o = skips[d - 1]
            u = conv(f"up{d}", prev, channels, o, 4, 2, 1, op="conv_transpose2d")
            n = norm(f"up{d}_norm", u, o)
            a = node(f"up{d}_act", [n], "relu")
            prev = node(f"d{d - 1}", [a, f"e{d - 1}"], "concat")
            channels = 2 * o
        node("head_pad", [prev], "pad", mode="reflect", amount=[1, 1, 1, 1])
        conv("head", "head_pad", channels, self.out_channels, 3, 1, 0)
        node("out", ["head"], "tanh")
        return out

    def tensors(self):
        return {k: v.detach().cpu().numpy().astype(np.float32) for k, v in self.state_dict().items()}

    def load_tensors(self, tensors):
        state = {k: torch.as_tensor(np.asarray(v)) for k, v in tensors.items()}
        self.load_state_dict(state, strict=True)


def unet_descriptor(net: UNet, name: str, output_kind: dict, metadata=None, nodes=None) -> dict:
    """Graph descriptor for `net`; raises `ExportError` on any op the runtime lacks."""
    nodes = net.nodes() if nodes is None else nodes
    for n in nodes:
        if n["op"] not in SUPPORTED_OPS:
            raise ExportError(f"node `{n['name']}` uses op `{n['op']}`, which the runtime does not implement")
    spec = lambda ch: {"channels": ch, "height": net.size, "width": net.size, "range": [-1.0, 1.0]}
    return {
        "name": name,
        "input": spec(net.in_channels),
        "output": spec(net.out_channels),
        "input_normalization": {"scale": [2.0] * net.in_channels, "offset": [-1.0] * net.in_channels},
        "output_normalization": {"scale": [0.5] * net.out_channels, "offset": [0.5] * net.out_channels},
        "output_kind": output_kind,
        "nodes": nodes,
        "output_node": "out",
        "metadata": metadata or {},
    }


class Discriminator(nn.Module):
    """Patch discriminator over the visual condition and both modalities stacked as channels."""

    def __init__(self, visual_channels=3, base_channels=16):
        super().__init__()
        c = base_channels
        self.body = nn.Sequential(
            nn.Conv2d(visual_channels + 2, c, 4, 2, 1),
            nn.LeakyReLU(LEAK),
            nn.Conv2d(c, 2 * c, 4, 2, 1),
            nn.InstanceNorm2d(2 * c),
            nn.LeakyReLU(LEAK),
            nn.Conv2d(2 * c, 4 * c, 4, 1, 1),
            nn.InstanceNorm2d(4 * c),
            nn.LeakyReLU(LEAK),
            nn.Conv2d(4 * c, 1, 4, 1, 1),
        )

    def forward(self, x, s, h):
        """Patch logits for the triple `(x, s, h)`; s and h are single-channel images in [-1, 1]."""
        return self.body(torch.cat([x, s, h], dim=1))
