"""Adam training loop over the matting net, plus dataset-level evaluation."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import data as datamod
from .losses import LossConfig, alpha_loss, comp_loss, total_loss
from .metrics import MetricsReport, evaluate, write_report_csv
from .network import (NetConfig, NetParams, forward, fuse_with_trimap,
                      init_params, load_checkpoint, save_checkpoint)
from .tensor import Tensor


@dataclass
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 4
    epochs: int = 50
    gamma: float = 0.5
    seed: int = 0
    crop: int = 64
    augment: bool = True
    freeze_norm: bool = False
    ablation: str = "attention"  # "attention" | "no_attention"

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.ablation not in ("attention", "no_attention"):
            raise ValueError(f"unknown ablation {self.ablation!r}")


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


def adam_step(params: NetParams, state: AdamState, cfg: TrainConfig):
    """Standard bias-corrected Adam update from the grads on params."""
    state.step += 1
    t = state.step
    b1, b2 = cfg.beta1, cfg.beta2
    for name, tensor in params.tensors.items():
        if tensor.grad is None:
            raise ValueError(f"adam_step: parameter {name} has no gradient")
        g = tensor.grad
        if name not in state.m:
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        mhat = state.m[name] / (1 - b1 ** t)
        vhat = state.v[name] / (1 - b2 ** t)
        tensor.data = tensor.data - cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps)


def sample_losses(sample: datamod.Sample, params: NetParams, cfg: TrainConfig):
    """Forward one sample; returns (total, alpha, comp) loss Tensors."""
    x = np.concatenate([sample.image, sample.trimap[:, :, None]], axis=2)
    raw, _ = forward(x, params, freeze_norm=cfg.freeze_norm)
    a_l = alpha_loss(raw, sample.gt_alpha)
    c_l = comp_loss(raw, sample.gt_fg, sample.gt_bg, sample.image)
    return total_loss(a_l, c_l, LossConfig(gamma=cfg.gamma)), a_l, c_l


def train(cfg: TrainConfig, data_root, out_dir, net_cfg: NetConfig | None = None,
          log_every: int = 0):
    """Train on the manifest's train split; writes loss.csv, best/final
    checkpoints and the resolved config. Returns the per-epoch mean losses."""
    manifest = datamod.load_manifest(data_root)
    ids = datamod.split_ids(manifest, "train")
    if not ids:
        raise ValueError(f"{data_root}: empty train split")
    if net_cfg is None:
        net_cfg = NetConfig(seed=cfg.seed, attention=cfg.ablation == "attention")
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "run_config.json"), "w") as f:
        json.dump({"train": asdict(cfg), "net": asdict(net_cfg)}, f,
                  indent=1, sort_keys=True)

    samples = {}
    for sid in ids:
        try:
            samples[sid] = datamod.load_sample(data_root, sid)
        except OSError as e:
            raise ValueError(f"unreadable sample {sid}: {e}") from e

    params = init_params(net_cfg)
    state = AdamState()
    rng = np.random.default_rng(cfg.seed)
    epoch_losses = []
    best = np.inf
    loss_rows = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(ids))
        totals = []
        for b0 in range(0, len(ids), cfg.batch_size):
            batch = [ids[i] for i in order[b0:b0 + cfg.batch_size]]
            params.zero_grad()
            bt = ba = bc = 0.0
            for sid in batch:
                s = samples[sid]
                if cfg.augment:
                    s = datamod.augment(s, int(rng.integers(2 ** 31)), cfg.crop)
                tot, a_l, c_l = sample_losses(s, params, cfg)
                scaled = tot * (1.0 / len(batch))
                scaled.backward()
                bt += tot.item() / len(batch)
                ba += a_l.item() / len(batch)
                bc += c_l.item() / len(batch)
            if not np.isfinite(bt):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}, batch {batch}")
            adam_step(params, state, cfg)
            totals.append(bt)
            loss_rows.append((epoch, state.step, bt, ba, bc))
        mean_loss = float(np.mean(totals))
        epoch_losses.append(mean_loss)
        if log_every and (epoch % log_every == 0 or epoch == cfg.epochs - 1):
            print(f"epoch {epoch}: loss {mean_loss:.5f}", flush=True)
        if mean_loss < best:
            best = mean_loss
            save_checkpoint(os.path.join(out_dir, "best.ckpt"), params, state.step)
    save_checkpoint(os.path.join(out_dir, "final.ckpt"), params, state.step)
    with open(os.path.join(out_dir, "loss.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("epoch", "step", "total_loss", "alpha_loss", "comp_loss"))
        for row in loss_rows:
            w.writerow((row[0], row[1], f"{row[2]:.8f}", f"{row[3]:.8f}", f"{row[4]:.8f}"))
    return epoch_losses


def predict_matte(params: NetParams, image: np.ndarray, tri: np.ndarray,
                  fuse: bool = True) -> np.ndarray:
    x = np.concatenate([image, tri[:, :, None]], axis=2)
    raw, _ = forward(x, params)
    matte = raw.data[:, :, 0]
    return fuse_with_trimap(matte, tri) if fuse else matte


def evaluate_dataset(checkpoint_path, data_root, split="test",
                     csv_path=None, method=None):
    """Mean metrics of the checkpoint over one split; optionally writes CSV.

    Samples that fail to evaluate are skipped with a warning and excluded
    from the mean; the report's pixel count covers evaluated samples only.
    """
    params, _ = load_checkpoint(checkpoint_path)
    manifest = datamod.load_manifest(data_root)
    ids = datamod.split_ids(manifest, split)
    if not ids:
        raise ValueError(f"{data_root}: empty split {split!r}")
    reports = []
    skipped = 0
    for sid in ids:
        try:
            s = datamod.load_sample(data_root, sid)
            matte = predict_matte(params, s.image, s.trimap)
            reports.append(evaluate(matte, s.gt_alpha))
        except (OSError, ValueError) as e:
            skipped += 1
            print(f"warning: skipping sample {sid}: {e}", flush=True)
    if not reports:
        raise ValueError("no sample could be evaluated")
    agg = MetricsReport(
        mse=float(np.mean([r.mse for r in reports])),
        sad=float(np.mean([r.sad for r in reports])),
        grad=float(np.mean([r.grad for r in reports])),
        conn=float(np.mean([r.conn for r in reports])),
        pixels=int(sum(r.pixels for r in reports)),
    )
    if csv_path:
        write_report_csv(csv_path, [(method or "matting_net", agg)])
    if skipped:
        print(f"warning: {skipped} sample(s) skipped", flush=True)
    return agg
