"""Command-line entry point.

Subcommands: gen-data, trimap, train, infer, eval, gradcheck,
export-attention. Exit codes: 0 success, 1 usage error, 2 data error,
3 numeric-check failure. Every run writes its fully resolved options as
JSON next to its outputs. An optional --config JSON file supplies defaults;
explicit flags override it.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import data as datamod
from . import pngio
from .checks import run_operator_checks
from .metrics import evaluate, write_report_csv
from .network import NetConfig, forward, load_checkpoint
from .train import TrainConfig, evaluate_dataset, predict_matte, train
from .trimap import (EmptyMaskError, TrimapConfig, generate_trimap,
                     trimap_to_u8, u8_to_trimap)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _dump_config(args, path):
    resolved = {k: v for k, v in vars(args).items()
                if k not in ("func", "config") and not k.startswith("_")}
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        json.dump(resolved, f, indent=1, sort_keys=True)
        f.write("\n")


def cmd_gen_data(args):
    if args.count < 1:
        print("error: --count must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        datamod.generate_dataset(args.out, args.count, args.size, args.seed,
                                 trimap_cfg=TrimapConfig(rate=args.rate),
                                 radius_jitter=args.jitter,
                                 test_fraction=args.test_fraction)
    except OSError as e:
        print(f"error: cannot write dataset: {e}", file=sys.stderr)
        return EXIT_DATA
    _dump_config(args, os.path.join(args.out, "run_config.json"))
    return 0


def cmd_trimap(args):
    try:
        mask = pngio.load_gray(args.mask)
    except OSError as e:
        print(f"error: cannot read mask {args.mask}: {e}", file=sys.stderr)
        return EXIT_DATA
    try:
        tri = generate_trimap(mask, TrimapConfig(rate=args.rate,
                                                 min_radius=args.min_radius))
    except EmptyMaskError:
        print(f"error: empty object in mask {args.mask}", file=sys.stderr)
        return EXIT_DATA
    pngio.save_gray_u8(args.out, trimap_to_u8(tri))
    _dump_config(args, args.out + ".config.json")
    return 0


def cmd_train(args):
    cfg = TrainConfig(lr=args.lr, batch_size=args.batch_size, epochs=args.epochs,
                      gamma=args.gamma, seed=args.seed, crop=args.crop,
                      augment=not args.no_augment, ablation=args.ablation)
    net_cfg = NetConfig(stages=args.stages, base_channels=args.base_channels,
                        seed=args.seed, attention=args.ablation == "attention")
    try:
        train(cfg, args.data, args.out, net_cfg, log_every=args.log_every)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    _dump_config(args, os.path.join(args.out, "cli_config.json"))
    return 0


def _load_inputs_for_infer(args):
    image = pngio.load_rgb(args.image)
    if args.trimap:
        tri = u8_to_trimap(pngio.load_gray_u8(args.trimap))
    else:
        mask = pngio.load_gray(args.mask)
        tri = generate_trimap(mask, TrimapConfig(rate=args.rate))
    if tri.shape != image.shape[:2]:
        raise ValueError(f"trimap {tri.shape} does not match image {image.shape[:2]}")
    return image, tri


def cmd_infer(args):
    if bool(args.trimap) == bool(args.mask):
        print("error: provide exactly one of --trimap / --mask", file=sys.stderr)
        return EXIT_USAGE
    try:
        params, _ = load_checkpoint(args.checkpoint)
        image, tri = _load_inputs_for_infer(args)
    except EmptyMaskError:
        print("error: empty object in mask", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    h0, w0 = image.shape[:2]
    small, scale = datamod.resize_cap(image, args.max_edge)
    if scale != 1.0:
        tri_small = datamod.resize_to(tri, small.shape[:2])
        # nearest level keeps the trimap three-valued after interpolation
        tri_small = np.round(tri_small * 2.0) / 2.0
        matte = predict_matte(params, small, tri_small)
        matte = datamod.resize_to(matte, (h0, w0))
    else:
        matte = predict_matte(params, image, tri)
    pngio.save_gray(args.out, matte)
    _dump_config(args, args.out + ".config.json")
    return 0


def cmd_eval(args):
    try:
        rep = evaluate_dataset(args.checkpoint, args.data, args.split,
                               csv_path=args.out, method=args.method)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    _dump_config(args, args.out + ".config.json")
    print(f"mse={rep.mse:.6g} sad={rep.sad:.6g} grad={rep.grad:.6g} conn={rep.conn:.6g}")
    return 0


def cmd_gradcheck(args):
    results = run_operator_checks(seeds=args.seeds, tol=args.tol)
    worst_name = max(results, key=results.get)
    ok = True
    for name, err in sorted(results.items()):
        status = "ok" if err <= args.tol else "FAIL"
        print(f"{name:20s} max_rel_err={err:.3e} [{status}]")
        ok = ok and err <= args.tol
    if args.out:
        _dump_config(args, args.out + ".config.json")
        with open(args.out, "w") as f:
            json.dump({k: v for k, v in results.items()}, f, indent=1, sort_keys=True)
    if not ok:
        print(f"error: gradient check failed (worst: {worst_name})", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def cmd_export_attention(args):
    try:
        params, _ = load_checkpoint(args.checkpoint)
        if not params.cfg.attention:
            print("error: checkpoint was trained without attention", file=sys.stderr)
            return EXIT_DATA
        image = pngio.load_rgb(args.image)
        tri = u8_to_trimap(pngio.load_gray_u8(args.trimap))
        if tri.shape != image.shape[:2]:
            raise ValueError(f"trimap {tri.shape} does not match image {image.shape[:2]}")
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    x = np.concatenate([image, tri[:, :, None]], axis=2)
    _, aux = forward(x, params, collect_maps=True)
    os.makedirs(args.out, exist_ok=True)
    for i, maps in enumerate(aux["maps"]):
        for kind in ("enc", "dec"):
            m = maps[kind].data[:, :, 0]
            lo, hi = m.min(), m.max()
            vis = (m - lo) / (hi - lo) if hi > lo else np.zeros_like(m)
            pngio.save_gray(os.path.join(args.out, f"stage{i}_{kind}.png"), vis)
    _dump_config(args, os.path.join(args.out, "run_config.json"))
    return 0


def build_parser():
    p = _Parser(prog="mattekit",
                description="Attention-guided alpha matting toolkit")
    p.add_argument("--config", help="JSON file with default option values")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--size", type=int, default=96)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--rate", type=float, default=0.03)
    g.add_argument("--jitter", type=int, default=0)
    g.add_argument("--test-fraction", type=float, default=1 / 9)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("trimap", help="binary mask -> 3-level trimap PNG")
    t.add_argument("--mask", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--rate", type=float, default=0.03)
    t.add_argument("--min-radius", type=int, default=1)
    t.set_defaults(func=cmd_trimap)

    tr = sub.add_parser("train", help="train the matting net")
    tr.add_argument("--data", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--epochs", type=int, default=10)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--batch-size", type=int, default=4)
    tr.add_argument("--gamma", type=float, default=0.5)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--crop", type=int, default=64)
    tr.add_argument("--stages", type=int, default=3)
    tr.add_argument("--base-channels", type=int, default=16)
    tr.add_argument("--no-augment", action="store_true")
    tr.add_argument("--log-every", type=int, default=1)
    tr.add_argument("--ablation", choices=("attention", "no_attention"),
                    default="attention")
    tr.set_defaults(func=cmd_train)

    inf = sub.add_parser("infer", help="predict a matte for one image")
    inf.add_argument("--image", required=True)
    inf.add_argument("--trimap")
    inf.add_argument("--mask")
    inf.add_argument("--checkpoint", required=True)
    inf.add_argument("--out", required=True)
    inf.add_argument("--rate", type=float, default=0.03)
    inf.add_argument("--max-edge", type=int, default=1500)
    inf.set_defaults(func=cmd_infer)

    ev = sub.add_parser("eval", help="metrics of a checkpoint over a split")
    ev.add_argument("--data", required=True)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--split", default="test")
    ev.add_argument("--out", required=True)
    ev.add_argument("--method", default="matting_net")
    ev.set_defaults(func=cmd_eval)

    gc = sub.add_parser("gradcheck", help="central-difference operator checks")
    gc.add_argument("--seeds", type=int, default=10)
    gc.add_argument("--tol", type=float, default=1e-4)
    gc.add_argument("--out", help="optional JSON results file")
    gc.set_defaults(func=cmd_gradcheck)

    ex = sub.add_parser("export-attention", help="write per-stage attention maps")
    ex.add_argument("--image", required=True)
    ex.add_argument("--trimap", required=True)
    ex.add_argument("--checkpoint", required=True)
    ex.add_argument("--out", required=True)
    ex.set_defaults(func=cmd_export_attention)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        try:
            with open(cfg_path) as f:
                defaults = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            print(f"error: cannot read config {cfg_path}: {e}", file=sys.stderr)
            return EXIT_USAGE
        for sp in parser._subparsers._group_actions[0].choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in dests})
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
