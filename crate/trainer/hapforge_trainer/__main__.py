"""Command line: train on a dataset directory, then export archives and fixtures."""

import argparse
import logging
from pathlib import Path

from .data import load_manifest
from .export import export
from .train import Checkpoint, TrainConfig, train


def main(argv=None):
    p = argparse.ArgumentParser(prog="hapforge_trainer")
    sub = p.add_subparsers(dest="command", required=True)
    t = sub.add_parser("train", help="train and save a checkpoint")
    t.add_argument("--dataset", required=True, type=Path)
    t.add_argument("--out", required=True, type=Path)
    t.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--lambda-l1", type=float, default=TrainConfig.lambda_l1)
    t.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    e = sub.add_parser("export", help="write archives and parity fixtures from a checkpoint")
    e.add_argument("--checkpoint", required=True, type=Path)
    e.add_argument("--out", required=True, type=Path)
    e.add_argument("--dataset", type=Path, help="take fixture inputs from this dataset's test split")
    e.add_argument("--fixtures", type=int, default=20)
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    if args.command == "train":
        cfg = TrainConfig(epochs=args.epochs, seed=args.seed, lambda_l1=args.lambda_l1, batch_size=args.batch_size)
        ckpt = train(args.dataset, cfg)
        ckpt.save(args.out / "checkpoint.pt")
    else:
        inputs = []
        if args.dataset is not None:
            records = load_manifest(args.dataset)["records"]
            ordered = [r for r in records if r["split"] == "test"] + [r for r in records if r["split"] != "test"]
            inputs = [args.dataset / r["visual_path"] for r in ordered[: args.fixtures]]
        export(Checkpoint.load(args.checkpoint), args.out, inputs)


if __name__ == "__main__":
    main()
