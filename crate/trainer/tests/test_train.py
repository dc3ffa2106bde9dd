import math

import numpy as np
import pytest
import torch

from hapforge_trainer.data import load_split
from hapforge_trainer.export import export, load_generator, network_input, reference_forward
from hapforge_trainer.model import Discriminator, UNet
from hapforge_trainer.train import (
    Checkpoint,
    TrainConfig,
    Trainer,
    TrainingError,
    discriminator_loss,
    generator_adversarial_loss,
    train,
)


def test_losses_at_indifferent_discriminator():
    half = torch.zeros(2, 1, 6, 6)  # logit 0 is probability 0.5
    assert abs(discriminator_loss(half, half).item() - 2 * math.log(2)) < 1e-6
    assert abs(generator_adversarial_loss(half).item() - math.log(2)) < 1e-6


def test_discriminator_sees_both_modalities():
    torch.manual_seed(0)
    d = Discriminator()
    x, s, h = torch.randn(1, 3, 64, 64), torch.randn(1, 1, 64, 64), torch.randn(1, 1, 64, 64)
    base = d(x, s, h)
    assert not torch.equal(base, d(x, s + 1, h))
    assert not torch.equal(base, d(x, s, h + 1))
    assert d.body[0].in_channels == 5


def test_generator_shapes():
    y = UNet()(torch.zeros(2, 3, 64, 64))
    assert y.shape == (2, 1, 64, 64)


def test_one_epoch_smoke(dataset, tmp_path):
    ckpt = train(dataset, TrainConfig(epochs=1, batch_size=4))
    assert len(ckpt.losses) == 1
    assert all(math.isfinite(v) for v in ckpt.losses[0].values())
    ckpt.save(tmp_path / "c.pt")
    assert Checkpoint.load(tmp_path / "c.pt").epoch == 1


def test_same_seed_same_curves(dataset):
    a = train(dataset, TrainConfig(epochs=2, batch_size=4, seed=3), limit=8)
    b = train(dataset, TrainConfig(epochs=2, batch_size=4, seed=3), limit=8)
    for ra, rb in zip(a.losses, b.losses):
        for k in ra:
            assert ra[k] == pytest.approx(rb[k], rel=1e-6, abs=1e-9)


def test_l1_dominated_training_regresses(dataset):
    data = load_split(dataset, "train", limit=4)
    t = Trainer(TrainConfig(lambda_l1=1e4, batch_size=4, seed=1))
    start = t.l1(data)
    curve = [t.step(data.x, data.s, data.h)["l1"] for _ in range(200)]
    end = t.l1(data)
    assert end < start
    assert np.mean(curve[-20:]) < np.mean(curve[:20])


def test_empty_split_is_an_error(dataset):
    with pytest.raises(ValueError):
        load_split(dataset, "nonexistent")


def test_non_finite_loss_aborts(dataset):
    data = load_split(dataset, "train", limit=2)
    t = Trainer(TrainConfig(batch_size=2))
    with pytest.raises(TrainingError):
        t.step(data.x * float("nan"), data.s, data.h)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(lambda_l1=0).validate()


def test_export_matches_framework_forward(dataset, tmp_path):
    ckpt = train(dataset, TrainConfig(epochs=1, batch_size=4), limit=8)
    inputs = sorted((dataset / "visual").glob("test*.png"))
    cases = export(ckpt, tmp_path, inputs)
    assert len(cases) == len(inputs)
    g_h_mem, _ = ckpt.generators()
    g_h = load_generator(tmp_path / "g_h.v2hw")
    x = network_input(tmp_path / "fixtures" / "case00_input.png")
    with torch.no_grad():
        in_framework = g_h_mem(torch.from_numpy(x)[None])[0, 0].numpy()
    assert np.abs(reference_forward(g_h, x) - in_framework).max() < 1e-4
