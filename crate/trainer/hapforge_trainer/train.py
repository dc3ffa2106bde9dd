"""Adversarial training of the two generators against one joint discriminator."""

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
import torch.nn.functional as F

from .data import Split, load_manifest, load_split, spectrogram_layout, trace_rate
from .model import Discriminator, UNet

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lambda_l1: float = 100.0
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    batch_size: int = 8
    epochs: int = 10
    seed: int = 0
    size: int = 64
    base_channels: int = 8

    def validate(self):
        for name in ("lambda_l1", "lr_g", "lr_d", "batch_size", "epochs", "size", "base_channels"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.size % 16:
            raise ValueError(f"size {self.size} is not divisible by 16")


@dataclass
class Checkpoint:
    g_h: dict
    g_s: dict
    d: dict
    epoch: int
    losses: list
    config: TrainConfig
    metadata: dict = field(default_factory=dict)

    def generators(self):
        nets = []
        for state in (self.g_h, self.g_s):
            net = UNet(size=self.config.size, base_channels=self.config.base_channels)
            net.load_state_dict(state)
            nets.append(net.eval())
        return tuple(nets)

    def save(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        torch.save({**asdict(self), "config": asdict(self.config)}, path)

    @classmethod
    def load(cls, path):
        raw = torch.load(path, weights_only=False)
        raw["config"] = TrainConfig(**raw["config"])
        return cls(**raw)


def discriminator_loss(real_logits, fake_logits):
    """-log D(x, s, h) - log(1 - D(x, G_s(x), G_h(x)))."""
    return F.binary_cross_entropy_with_logits(real_logits, torch.ones_like(real_logits)) + F.binary_cross_entropy_with_logits(
        fake_logits, torch.zeros_like(fake_logits)
    )


def generator_adversarial_loss(fake_logits):
    """-log D(x, G_s(x), G_h(x))."""
    return F.binary_cross_entropy_with_logits(fake_logits, torch.ones_like(fake_logits))


def reconstruction_loss(s_fake, s, h_fake, h):
    return F.l1_loss(s_fake, s) + F.l1_loss(h_fake, h)


class Trainer:
    def __init__(self, config: TrainConfig):
        config.validate()
        self.config = config
        torch.manual_seed(config.seed)
        self.g_h = UNet(size=config.size, base_channels=config.base_channels)
        self.g_s = UNet(size=config.size, base_channels=config.base_channels)
        self.d = Discriminator()
        betas = (config.beta1, config.beta2)
        self.opt_g = torch.optim.Adam([*self.g_h.parameters(), *self.g_s.parameters()], lr=config.lr_g, betas=betas)
        self.opt_d = torch.optim.Adam(self.d.parameters(), lr=config.lr_d, betas=betas)
        self.shuffle = torch.Generator().manual_seed(config.seed)

    def step(self, x, s, h):
        """One discriminator update followed by one generator update."""
        s_fake, h_fake = self.g_s(x), self.g_h(x)
        self.opt_d.zero_grad()
        l_d = discriminator_loss(self.d(x, s, h), self.d(x, s_fake.detach(), h_fake.detach()))
        l_d.backward()
        self.opt_d.step()

        self.opt_g.zero_grad()
        adv = generator_adversarial_loss(self.d(x, s_fake, h_fake))
        l1 = reconstruction_loss(s_fake, s, h_fake, h)
        l_g = adv + self.config.lambda_l1 * l1
        l_g.backward()
        self.opt_g.step()
        out = {"d": l_d.item(), "g_adv": adv.item(), "l1": l1.item()}
        bad = [k for k, v in out.items() if not math.isfinite(v)]
        if bad:
            raise TrainingError(f"non-finite loss {bad} ({out})")
        return out

    def epoch(self, data: Split):
        order = torch.randperm(len(data), generator=self.shuffle)
        sums, batches = {}, 0
        for i in range(0, len(order), self.config.batch_size):
            idx = order[i : i + self.config.batch_size]
            for k, v in self.step(data.x[idx], data.s[idx], data.h[idx]).items():
                sums[k] = sums.get(k, 0.0) + v
            batches += 1
        return {k: v / batches for k, v in sums.items()}

    @torch.no_grad()
    def l1(self, data: Split):
        return reconstruction_loss(self.g_s(data.x), data.s, self.g_h(data.x), data.h).item()

    def checkpoint(self, epoch, losses, metadata=None):
        meta = {"optimizer": "adam", "betas": [self.config.beta1, self.config.beta2], **(metadata or {})}
        return Checkpoint(
            g_h={k: v.clone() for k, v in self.g_h.state_dict().items()},
            g_s={k: v.clone() for k, v in self.g_s.state_dict().items()},
            d={k: v.clone() for k, v in self.d.state_dict().items()},
            epoch=epoch,
            losses=losses,
            config=self.config,
            metadata=meta,
        )


def train(dataset_dir, config: TrainConfig, limit=None) -> Checkpoint:
    """Trains on the `train` split, logging per-epoch losses and the validation L1."""
    torch.use_deterministic_algorithms(True)
    train_set = load_split(dataset_dir, "train", config.size, limit)
    try:
        val_set = load_split(dataset_dir, "val", config.size, limit)
    except ValueError:
        val_set = None
    trainer = Trainer(config)
    losses = []
    for epoch in range(1, config.epochs + 1):
        row = {"epoch": epoch, **trainer.epoch(train_set)}
        if val_set is not None:
            row["val_l1"] = trainer.l1(val_set)
        log.info("epoch %d: %s", epoch, row)
        losses.append(row)
    manifest = load_manifest(dataset_dir)
    first = next(r for r in manifest["records"] if r["split"] == "train")
    layout = spectrogram_layout(manifest, trace_rate(Path(dataset_dir) / first["trace_path"]))
    return trainer.checkpoint(config.epochs, losses, {"spectrogram_layout": layout, "dataset_seed": manifest["seed"]})
