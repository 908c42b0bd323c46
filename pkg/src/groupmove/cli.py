"""Command line entry point: ``groupmove <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace as dc_replace
from pathlib import Path

from . import bench, cipher, codec, mining
from .world import ScenarioConfig, SensorGrid, read_trajectories, simulate_group, write_trajectories

log = logging.getLogger("groupmove")

KEY_ENV = "GROUPMOVE_KEY"


def _grid(args) -> SensorGrid:
    return SensorGrid(args.width, args.height, args.clusters)


def _scenario(args) -> ScenarioConfig:
    config = ScenarioConfig(
        group_size=args.n, gdr=args.gdr, batch_period=args.D, error_bound=args.eps,
        seed=args.seed, tracking_interval=args.interval, speed=args.speed,
    )
    if args.config:
        # values from the config file take precedence over flags
        fileconf = ScenarioConfig.from_file(args.config)
        overrides = {}
        for raw in Path(args.config).read_text().splitlines():
            key = raw.split("#", 1)[0].partition("=")[0].strip()
            if key:
                name = {"n": "group_size", "D": "batch_period", "eps": "error_bound"}.get(key, key)
                overrides[name] = getattr(fileconf, name)
        config = dc_replace(config, **overrides)
    return config


def _load_groups(path) -> dict[int, int]:
    return {int(k): int(v) for k, v in json.loads(Path(path).read_text()).items()}


def _key(args) -> cipher.KeySchedule:
    key_hex = args.key_hex or os.environ.get(KEY_ENV)
    if not key_hex:
        raise SystemExit(f"no key: pass --key-hex or set {KEY_ENV}")
    return cipher.KeySchedule.from_hex(key_hex)


def cmd_simulate(args) -> None:
    config, grid = _scenario(args), _grid(args)
    seqs = simulate_group(config, grid, n_intervals=args.history + config.batch_period)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectories(out / "trajectories.csv", seqs, grid)
    log.info("wrote %d objects x %d intervals", len(seqs), args.history + config.batch_period)


def cmd_mine(args) -> None:
    grid = _grid(args)
    seqs = read_trajectories(args.input, grid)
    result = mining.mine_groups(seqs, grid, regions=args.regions, threshold=args.threshold)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "groups.json").write_text(json.dumps({str(k): v for k, v in sorted(result.grouping.partition.items())}, indent=1))
    for gid, tree in result.models.items():
        (out / f"group_{gid}.pst").write_bytes(tree.to_bytes())
    log.info("found groups %s", result.grouping.groups())


def _window(seqs, args):
    if args.start is None and args.stop is None:
        return seqs
    start = args.start or 0
    stop = args.stop if args.stop is not None else 1 << 62
    return [s.window(start, stop) for s in seqs]


def cmd_compress(args) -> None:
    grid = _grid(args)
    seqs = _window(read_trajectories(args.input, grid), args)
    model = mining.PatternTree.from_bytes(Path(args.model).read_bytes())
    groups = _load_groups(args.groups) if args.groups else {s.object_id: 0 for s in seqs}
    result = codec.compress_batch(seqs, grid, model, groups, args.eps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not args.groups:
        (out / "groups.json").write_text(json.dumps({str(k): v for k, v in sorted(groups.items())}, indent=1))
    (out / "batch.bin").write_bytes(codec.write_container(result))
    log.info("%d packets, %d bytes (+%d table bytes)", result.n_packets, result.packet_bytes, result.table_bytes)


def cmd_decompress(args) -> None:
    grid = _grid(args)
    model = mining.PatternTree.from_bytes(Path(args.model).read_bytes())
    batch_start, pairs = codec.read_container(Path(args.input).read_bytes())
    groups = _load_groups(args.groups or Path(args.input).with_name("groups.json"))
    seqs = codec.decompress_batch(pairs, grid, model, groups, batch_start=batch_start)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectories(out / "trajectories.csv", seqs, grid)


def cmd_encrypt(args) -> None:
    data = Path(args.input).read_bytes()
    Path(args.out).write_bytes(cipher.encrypt_packet(_key(args), data, mode=args.mode))


def cmd_decrypt(args) -> None:
    data = Path(args.input).read_bytes()
    Path(args.out).write_bytes(cipher.decrypt_packet(_key(args), data, mode=args.mode))


def cmd_bench(args) -> None:
    spec = bench.ExperimentSpec(
        gdrs=tuple(args.gdrs), group_sizes=tuple(args.ns), batch_periods=tuple(args.Ds),
        error_bounds=tuple(args.eps_list), repetitions=args.reps, seed_base=args.seed,
        train_intervals=args.history, mine=args.mine, grid=_grid(args),
    )
    rows = bench.run_experiment(spec, workers=args.workers)
    for path in bench.emit_report(rows, args.out):
        log.info("wrote %s", path)
    for check in bench.check_trends(rows):
        print(f"{'PASS' if check.ok else 'FAIL'}  {check.name}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupmove", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--width", type=int, default=16)
    grid.add_argument("--height", type=int, default=16)
    grid.add_argument("--clusters", type=int, default=4, help="clusters per side")

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--config", help="key=value scenario file (overrides flags)")
    scen.add_argument("--n", type=int, default=4, help="group size")
    scen.add_argument("--gdr", type=float, default=0.0)
    scen.add_argument("--D", type=int, default=100, help="batch period")
    scen.add_argument("--eps", type=int, default=0, help="error bound in hops")
    scen.add_argument("--seed", type=int, default=0)
    scen.add_argument("--interval", type=float, default=0.5, help="tracking interval")
    scen.add_argument("--speed", type=float, default=1.0)

    p = sub.add_parser("simulate", parents=[grid, scen], help="generate group trajectories")
    p.add_argument("--history", type=int, default=200, help="intervals preceding the batch")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mine", parents=[grid], help="discover groups and group predictors")
    p.add_argument("--input", required=True)
    p.add_argument("--regions", type=int, default=3)
    p.add_argument("--threshold", type=float, default=0.2, help="similarity score needed for an edge")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("compress", parents=[grid], help="pack one batch into update packets")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--groups")
    p.add_argument("--eps", type=int, default=0)
    p.add_argument("--start", type=int)
    p.add_argument("--stop", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", parents=[grid], help="unpack a batch container")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--groups")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompress)

    for name, func in (("encrypt", cmd_encrypt), ("decrypt", cmd_decrypt)):
        p = sub.add_parser(name, help=f"Blowfish-{name} a file")
        p.add_argument("--input", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--key-hex", help=f"key as hex (or set {KEY_ENV})")
        p.add_argument("--mode", choices=("ecb", "cbc"), default="ecb")
        p.set_defaults(func=func)

    p = sub.add_parser("bench", parents=[grid], help="run the experiment sweep")
    p.add_argument("--gdrs", type=float, nargs="+", default=[0.1, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--ns", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    p.add_argument("--Ds", type=int, nargs="+", default=[50, 100, 200])
    p.add_argument("--eps-list", type=int, nargs="+", default=[0])
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history", type=int, default=200)
    p.add_argument("--mine", action="store_true", help="mine groups instead of using ground truth")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
