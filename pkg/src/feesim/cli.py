"""Operator command line: inspect snapshots, localize, simulate, evaluate
baselines, generate synthetic networks, and serve the wire protocol.

Configuration resolves flags over config-file entries over built-in
defaults; every run honoring --seed is bit-reproducible. Result CSVs are
accompanied by a .manifest.json recording the resolved configuration,
seed, and snapshot hash.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass

import numpy as np

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from . import baselines
from .env import EnvConfig, FeeEnv
from .errors import ConfigError, FeesimError
from .graph import NetworkGraph, localize
from .server import ProtocolServer, serve_stream
from .simulate import simulate_round
from .snapshot import (
    HalfHalf,
    UniformRandom,
    aggregate_channels,
    channel_to_records,
    init_balances,
    parse_merchants,
    parse_snapshot,
)
from .synth import SynthConfig, synthetic_records, write_merchants, write_snapshot_csv
from .traffic import TrafficSpec

logger = logging.getLogger(__name__)

CONFIG_KEYS = (
    "snapshot",
    "merchants",
    "node_index",
    "localization_size",
    "fee_rate_upper",
    "base_fee_upper",
    "amounts",
    "counts",
    "epsilons",
    "episode_length",
    "gamma",
    "balance_init",
    "seed",
)

DEFAULTS = {
    "node_index": "76620",
    "localization_size": 100,
    "fee_rate_upper": 1000.0,
    "base_fee_upper": 10000,
    "amounts": [10000, 50000, 100000],  # sat
    "counts": [10, 10, 10],
    "epsilons": [0.6, 0.6, 0.6],
    "episode_length": 200,
    "gamma": 0.99,
    "balance_init": "half",
    "seed": 0,
}


@dataclass
class Resolved:
    """Fully resolved run configuration plus input paths."""

    snapshot: str
    merchants: str | None
    node_index: str
    localization_size: int
    fee_rate_upper: float
    base_fee_upper: int
    amounts: list
    counts: list
    epsilons: list
    episode_length: int
    gamma: float
    balance_init: str
    seed: int

    def traffic(self) -> TrafficSpec:
        return TrafficSpec.from_sat(self.amounts, self.counts, self.epsilons)

    def env_config(self) -> EnvConfig:
        if self.balance_init == "half":
            init = HalfHalf()
        elif self.balance_init == "uniform":
            init = UniformRandom()
        else:
            raise ConfigError(f"unknown balance_init: {self.balance_init}")
        try:
            return EnvConfig(
                node_index=str(self.node_index),
                localization_size=int(self.localization_size),
                fee_rate_upper=float(self.fee_rate_upper),
                base_fee_upper=int(self.base_fee_upper),
                traffic=self.traffic(),
                episode_length=int(self.episode_length),
                gamma=float(self.gamma),
                balance_init=init,
                seed=int(self.seed),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _load_config_file(path) -> dict:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    unknown = set(data) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def _resolve(args) -> Resolved:
    values = dict(DEFAULTS)
    values["snapshot"] = None
    values["merchants"] = None
    if getattr(args, "config", None):
        values.update(_load_config_file(args.config))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if not values.get("snapshot"):
        raise ConfigError("a snapshot file is required (--snapshot or config file)")
    if not (len(values["amounts"]) == len(values["counts"]) == len(values["epsilons"])):
        raise ConfigError("amounts, counts, and epsilons must have equal length")
    return Resolved(**{k: values[k] for k in ("snapshot", "merchants", *DEFAULTS)})


def _load_graph(resolved: Resolved) -> NetworkGraph:
    records = parse_snapshot(resolved.snapshot)
    channels = init_balances(aggregate_channels(records), HalfHalf())
    merchants = ()
    if resolved.merchants:
        nodes = {r.source_id for r in records} | {r.target_id for r in records}
        merchants = parse_merchants(resolved.merchants, known_nodes=nodes).ids
    return NetworkGraph(channels, merchants=merchants)


def _snapshot_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(output, resolved: Resolved, extra=None) -> None:
    manifest = {
        "config": asdict(resolved),
        "snapshot_sha256": _snapshot_sha256(resolved.snapshot),
    }
    if extra:
        manifest.update(extra)
    path = f"{output}.manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    logger.info("wrote %s", path)


# --- subcommands ---


def cmd_info(args) -> int:
    resolved = _resolve(args)
    records = parse_snapshot(resolved.snapshot)
    channels = aggregate_channels(records)
    nodes = {r.source_id for r in records} | {r.target_id for r in records}
    total_sat = sum(c.capacity for c in channels) // 1000
    print(f"snapshot: {resolved.snapshot}")
    print(f"nodes: {len(nodes)}  channels: {len(channels)}  total capacity: {total_sat} sat")
    if resolved.merchants:
        merchants = parse_merchants(resolved.merchants, known_nodes=nodes)
        print(f"merchants: {len(merchants)} (unknown: {merchants.unknown_count})")
    if args.node is not None:
        g = NetworkGraph(channels)
        if args.node not in g:
            print(f"node {args.node}: not present")
            return 1
        chs = g.node_channels(args.node)
        cap_sat = sum(g.capacity(c) for c in chs) // 1000
        print(f"node {args.node}: {len(chs)} channels, capacity {cap_sat} sat")
        for c in chs:
            ch = g.payment_channel(c)
            peer = ch.peer_of(args.node)
            pol = ch.policy_at(args.node)
            print(
                f"  channel {c}: peer {peer}, capacity {ch.capacity // 1000} sat, "
                f"fee rate {pol.fee_rate:g} ppm, base fee {pol.base_fee} msat"
            )
    return 0


def cmd_localize(args) -> int:
    resolved = _resolve(args)
    g = _load_graph(resolved)
    sub = localize(g, resolved.node_index, resolved.localization_size)
    records = [rec for c in range(sub.m) for rec in channel_to_records(sub.payment_channel(c))]
    if args.output:
        write_snapshot_csv(records, args.output)
        print(f"wrote {args.output}")
    print(f"localized around {resolved.node_index}: {sub.n} nodes, {sub.m} channels")
    return 0


def cmd_simulate(args) -> int:
    resolved = _resolve(args)
    g = _load_graph(resolved)
    sub = localize(g, resolved.node_index, resolved.localization_size)
    sub.init_balances(HalfHalf() if resolved.balance_init == "half" else UniformRandom(resolved.seed))
    spec = resolved.traffic()
    rng = np.random.default_rng(resolved.seed)
    active = None if args.active == "center" else set(range(sub.m))
    rows = []
    for rnd in range(args.rounds):
        report = simulate_round(sub, spec, resolved.node_index, active_set=active, rng=rng)
        print(
            f"round {rnd}: settled {report.settled}, failed {report.failed}, "
            f"forwarded n={[int(v) for v in report.routed_counts]}"
        )
        for i, c in enumerate(report.channel_indices):
            rows.append(
                {
                    "round": rnd,
                    "channel": c,
                    "peer": sub.payment_channel(c).peer_of(resolved.node_index),
                    "balance_msat": int(report.balances[i]),
                    "routed_amount_msat": int(report.routed_amounts[i]),
                    "routed_count": int(report.routed_counts[i]),
                    "settled": report.settled,
                    "failed": report.failed,
                }
            )
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        _write_manifest(args.output, resolved, {"rounds": args.rounds, "active": args.active})
        print(f"wrote {args.output}")
    return 0


def _build_policy(args, env: FeeEnv):
    if args.policy == "static":
        return baselines.static_policy(env, args.alpha, args.beta)
    if args.policy == "snapshot":
        return baselines.snapshot_fee_policy(env)
    if args.policy == "match-peer":
        return baselines.match_peer_policy(env)
    if args.policy == "proportional":
        return baselines.proportional_policy(env, args.alpha_max)
    raise ConfigError(f"unknown policy: {args.policy}")


def cmd_evaluate(args) -> int:
    resolved = _resolve(args)
    g = _load_graph(resolved)
    env = FeeEnv(g, resolved.env_config())
    seeds = [resolved.seed + i for i in range(args.seeds)]
    rows = []
    if args.policy == "random-search":
        for seed in seeds:
            action, income = baselines.random_search_agent(env, budget=args.budget, seed=seed)
            rows.append((resolved.node_index, f"random-search[{args.budget}]", seed, 0, income))
    else:
        policy = _build_policy(args, env)
        result = baselines.evaluate_policy(env, policy, episodes=args.episodes, seeds=seeds)
        for seed, episode, income in result.rows:
            rows.append((resolved.node_index, policy.name, seed, episode, income))
        print(f"{policy.name}: mean {result.mean:.2f}, std {result.std:.2f} (msat, discounted)")
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "policy", "seed", "episode", "discounted_income"])
            writer.writerows(rows)
        _write_manifest(args.output, resolved, {"policy": args.policy})
        print(f"wrote {args.output}")
    else:
        for row in rows:
            print(",".join(str(v) for v in row))
    return 0


def cmd_serve(args) -> int:
    resolved = _resolve(args)
    g = _load_graph(resolved)
    config = resolved.env_config()

    def env_factory():
        return FeeEnv(g, config)

    if args.stdio:
        serve_stream(sys.stdin, sys.stdout, env_factory)
        return 0
    host, _, port = args.listen.rpartition(":")
    server = ProtocolServer((host or "127.0.0.1", int(port)), env_factory, max_sessions=args.max_sessions)
    print(f"listening on {server.server_address[0]}:{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_synth(args) -> int:
    records, merchants = synthetic_records(SynthConfig(n_routers=args.routers, seed=args.seed or 7))
    write_snapshot_csv(records, args.output)
    print(f"wrote {args.output} ({len(records)} records)")
    if args.merchants_output:
        write_merchants(merchants, args.merchants_output)
        print(f"wrote {args.merchants_output} ({len(merchants)} merchants)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feesim",
        description="Payment-channel network simulator and fee environment",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, center_flag=True):
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--snapshot", help="snapshot file (CSV or JSON)")
        p.add_argument("--merchants", help="merchants file (one node id per line)")
        if center_flag:
            p.add_argument("--node", dest="node_index", help="center node id")
        p.add_argument("--size", dest="localization_size", type=int, help="localization size")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--amounts", type=int, nargs="+", help="transaction amounts (sat)")
        p.add_argument("--counts", type=int, nargs="+", help="transactions per amount")
        p.add_argument("--epsilons", type=float, nargs="+", help="merchant fractions")
        p.add_argument("--episode-length", dest="episode_length", type=int)
        p.add_argument("--gamma", type=float, help="discount factor")
        p.add_argument("--fee-rate-upper", dest="fee_rate_upper", type=float)
        p.add_argument("--base-fee-upper", dest="base_fee_upper", type=int)
        p.add_argument("--balance-init", dest="balance_init", choices=["half", "uniform"])

    p = sub.add_parser("info", help="snapshot statistics")
    add_common(p, center_flag=False)
    p.add_argument("--node", dest="node", help="show one node's channels")
    p.set_defaults(func=cmd_info, node_index=None)

    p = sub.add_parser("localize", help="emit a localized subgraph as a snapshot")
    add_common(p)
    p.add_argument("--output", help="output snapshot CSV")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("simulate", help="run simulation rounds and report per-channel stats")
    add_common(p)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--active", choices=["center", "all"], default="center")
    p.add_argument("--output", help="output CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="evaluate a baseline policy")
    add_common(p)
    p.add_argument(
        "--policy",
        required=True,
        choices=["static", "snapshot", "match-peer", "proportional", "random-search"],
    )
    p.add_argument("--alpha", type=float, default=0.0, help="static fee rate (ppm)")
    p.add_argument("--beta", type=float, default=0.0, help="static base fee (msat)")
    p.add_argument("--alpha-max", dest="alpha_max", type=float, default=None)
    p.add_argument("--budget", type=int, default=100, help="random-search candidates")
    p.add_argument("--seeds", type=int, default=5, help="number of seeds (seed..seed+n-1)")
    p.add_argument("--episodes", type=int, default=1, help="episodes per seed")
    p.add_argument("--output", help="output CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="serve the line-delimited JSON protocol")
    add_common(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--stdio", action="store_true", help="one session over stdin/stdout")
    mode.add_argument("--listen", help="TCP address host:port")
    p.add_argument("--max-sessions", dest="max_sessions", type=int, default=16)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate a deterministic synthetic snapshot")
    p.add_argument("--output", required=True, help="snapshot CSV to write")
    p.add_argument("--merchants-output", help="merchants file to write")
    p.add_argument("--routers", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FeesimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
