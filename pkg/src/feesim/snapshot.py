"""Snapshot and merchant-file ingest.

Parses channel records from a network snapshot (CSV or JSON, see
docs/snapshot_format.md), aggregates parallel channels into one channel
per node pair, and initializes channel balances. All monetary values are
converted to millisatoshi (msat) on ingest; snapshot capacities are given
in satoshi and multiplied by 1000.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    EmptySnapshotError,
    MalformedLineError,
    MalformedRecordError,
    ManualSumMismatchError,
)

logger = logging.getLogger(__name__)

MSAT_PER_SAT = 1000

# Canonical record fields, plus aliases seen in common snapshot exports.
RECORD_FIELDS = (
    "source_id",
    "target_id",
    "channel_id",
    "capacity",
    "base_fee",
    "fee_rate",
    "min_htlc",
    "last_update",
)

_FIELD_ALIASES = {
    "source": "source_id",
    "target": "target_id",
    "destination": "target_id",
    "short_channel_id": "channel_id",
    "satoshis": "capacity",
    "fee_base_msat": "base_fee",
    "fee_proportional_millionths": "fee_rate",
    "htlc_minimum_msat": "min_htlc",
}


@dataclass(frozen=True)
class FeePolicy:
    """Directional fee policy: proportional rate in ppm plus a flat base in msat."""

    fee_rate: float
    base_fee: int

    def __post_init__(self):
        if self.fee_rate < 0 or self.base_fee < 0:
            raise ValueError("fee policy components must be non-negative")


@dataclass(frozen=True)
class ChannelRecord:
    """One directed channel record as it appears in the snapshot.

    capacity is in satoshi (the snapshot's native unit); base_fee and
    min_htlc are msat; fee_rate is proportional millionths (ppm).
    """

    source_id: str
    target_id: str
    channel_id: str
    capacity: int
    base_fee: int
    fee_rate: float
    min_htlc: int
    last_update: int


@dataclass
class PaymentChannel:
    """An aggregated, undirected channel between two nodes.

    Endpoints are kept in lexicographic order (node_a < node_b); capacity
    and balances are msat and always satisfy balance_a + balance_b ==
    capacity once balances are initialized.
    """

    node_a: str
    node_b: str
    capacity: int
    policy_a: FeePolicy
    policy_b: FeePolicy
    min_htlc: int = 0
    balance_a: int = 0
    balance_b: int = 0
    channel_ids: tuple[str, ...] = ()

    @property
    def endpoints(self) -> tuple[str, str]:
        return (self.node_a, self.node_b)

    def balance_at(self, node: str) -> int:
        if node == self.node_a:
            return self.balance_a
        if node == self.node_b:
            return self.balance_b
        raise KeyError(node)

    def policy_at(self, node: str) -> FeePolicy:
        if node == self.node_a:
            return self.policy_a
        if node == self.node_b:
            return self.policy_b
        raise KeyError(node)

    def peer_of(self, node: str) -> str:
        if node == self.node_a:
            return self.node_b
        if node == self.node_b:
            return self.node_a
        raise KeyError(node)


# --- balance initialization modes ---


@dataclass(frozen=True)
class HalfHalf:
    """Each endpoint gets half the capacity; an odd msat goes to the
    lexicographically smaller endpoint."""


@dataclass(frozen=True)
class UniformRandom:
    """One endpoint's balance is drawn uniformly on [0, capacity].

    A seed of None defers seeding to the caller (the environment derives
    one from its reset seed); passing UniformRandom(None) directly to
    init_balances draws from OS entropy.
    """

    seed: int | None = None


@dataclass(frozen=True)
class Manual:
    """Explicit balances keyed by endpoint pair; unlisted channels fall
    back to HalfHalf. Values must sum to the channel capacity."""

    balances: Mapping[tuple[str, str], tuple[int, int]] = field(default_factory=dict)


BalanceInitMode = HalfHalf | UniformRandom | Manual


# --- parsing ---


def _coerce_record(raw: Mapping[str, object], line: int) -> ChannelRecord:
    values = {}
    for key, value in raw.items():
        name = _FIELD_ALIASES.get(key, key)
        if name in RECORD_FIELDS:
            values[name] = value
    missing = [f for f in RECORD_FIELDS if f not in values or values[f] in (None, "")]
    if missing:
        raise MalformedRecordError(line, f"missing field(s): {', '.join(missing)}")
    try:
        source = str(values["source_id"]).strip()
        target = str(values["target_id"]).strip()
        channel_id = str(values["channel_id"]).strip()
        capacity = int(values["capacity"])
        base_fee = int(values["base_fee"])
        fee_rate = float(values["fee_rate"])
        min_htlc = int(values["min_htlc"])
        last_update = int(values["last_update"])
    except (TypeError, ValueError) as exc:
        raise MalformedRecordError(line, f"bad field value: {exc}") from exc
    if not source or not target:
        raise MalformedRecordError(line, "empty node id")
    if source == target:
        raise MalformedRecordError(line, "source and target are the same node")
    if capacity <= 0:
        raise MalformedRecordError(line, f"capacity must be positive, got {capacity}")
    if base_fee < 0 or fee_rate < 0 or min_htlc < 0:
        raise MalformedRecordError(line, "negative fee or min_htlc")
    return ChannelRecord(
        source_id=source,
        target_id=target,
        channel_id=channel_id,
        capacity=capacity,
        base_fee=base_fee,
        fee_rate=fee_rate,
        min_htlc=min_htlc,
        last_update=last_update,
    )


def _parse_json_snapshot(text: str) -> list[ChannelRecord]:
    stripped = text.lstrip()
    records: list[ChannelRecord] = []
    if stripped.startswith("[") or stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            doc = None
        if doc is not None:
            if isinstance(doc, dict):
                doc = doc.get("channels", doc.get("edges"))
            if not isinstance(doc, list):
                raise MalformedRecordError(1, "JSON snapshot must be a list of records")
            for i, raw in enumerate(doc, start=1):
                if not isinstance(raw, dict):
                    raise MalformedRecordError(i, "record is not an object")
                records.append(_coerce_record(raw, i))
            return records
    # fall back to JSON lines: one object per line
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecordError(i, f"invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise MalformedRecordError(i, "record is not an object")
        records.append(_coerce_record(raw, i))
    return records


def _parse_csv_snapshot(text: str) -> list[ChannelRecord]:
    records: list[ChannelRecord] = []
    reader = csv.reader(text.splitlines())
    header: list[str] | None = None
    for i, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if header is None:
            first = _FIELD_ALIASES.get(cells[0], cells[0])
            if first in RECORD_FIELDS:
                header = cells
                continue
            # headerless file: assume the canonical column order
            header = list(RECORD_FIELDS)
        if len(cells) != len(header):
            raise MalformedRecordError(i, f"expected {len(header)} fields, got {len(cells)}")
        records.append(_coerce_record(dict(zip(header, cells)), i))
    return records


def parse_snapshot(path) -> list[ChannelRecord]:
    """Parse a snapshot file into directed channel records, order preserved.

    Both CSV (with or without header) and JSON (array, {"channels": [...]},
    or one object per line) forms are accepted; see docs/snapshot_format.md.

    Raises MalformedRecordError (with line number) or EmptySnapshotError.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        records = _parse_json_snapshot(text)
    else:
        records = _parse_csv_snapshot(text)
    if not records:
        raise EmptySnapshotError(f"no channel records in {path}")
    return records


@dataclass(frozen=True)
class MerchantFile:
    """Parsed merchants list plus a count of ids missing from the snapshot."""

    ids: frozenset[str]
    unknown_count: int = 0

    def __iter__(self):
        return iter(self.ids)

    def __len__(self):
        return len(self.ids)

    def __contains__(self, item):
        return item in self.ids


def parse_merchants(path, known_nodes: Iterable[str] | None = None) -> MerchantFile:
    """Parse a merchants file (one node id per line, '#' comments allowed).

    Duplicate ids are collapsed. Ids absent from known_nodes (when given)
    are retained but counted and logged as a warning.
    """
    ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            entry = line.strip()
            if not entry or entry.startswith("#"):
                continue
            if any(ch.isspace() for ch in entry):
                raise MalformedLineError(i, f"node id contains whitespace: {entry!r}")
            ids.add(entry)
    unknown = 0
    if known_nodes is not None:
        known = set(known_nodes)
        unknown = sum(1 for node in ids if node not in known)
        if unknown:
            logger.warning("%d merchant id(s) not present in the snapshot", unknown)
    return MerchantFile(ids=frozenset(ids), unknown_count=unknown)


# --- aggregation ---


def aggregate_channels(records: list[ChannelRecord]) -> list[PaymentChannel]:
    """Collapse records into exactly one channel per unordered node pair.

    Directional records sharing a channel_id are the two directions of one
    channel, so each channel's capacity is counted once (and converted to
    msat). Per direction, fee rate and base fee are the arithmetic mean of
    that direction's records; min_htlc is the minimum across records. A
    direction with no records mirrors the opposite direction's policy.
    Output is sorted by endpoint pair; balances are left at zero.
    """
    by_pair: dict[tuple[str, str], dict] = {}
    for rec in records:
        a, b = sorted((rec.source_id, rec.target_id))
        entry = by_pair.setdefault(
            (a, b),
            {"cap_by_id": {}, "rates_a": [], "bases_a": [], "rates_b": [], "bases_b": [], "minh": []},
        )
        if rec.channel_id not in entry["cap_by_id"]:
            entry["cap_by_id"][rec.channel_id] = rec.capacity
        if rec.source_id == a:
            entry["rates_a"].append(rec.fee_rate)
            entry["bases_a"].append(rec.base_fee)
        else:
            entry["rates_b"].append(rec.fee_rate)
            entry["bases_b"].append(rec.base_fee)
        entry["minh"].append(rec.min_htlc)

    channels: list[PaymentChannel] = []
    for (a, b) in sorted(by_pair):
        entry = by_pair[(a, b)]
        capacity = sum(entry["cap_by_id"].values()) * MSAT_PER_SAT
        rates_a, bases_a = entry["rates_a"], entry["bases_a"]
        rates_b, bases_b = entry["rates_b"], entry["bases_b"]
        if not rates_a:  # only the b->a direction was announced
            rates_a, bases_a = rates_b, bases_b
        if not rates_b:
            rates_b, bases_b = rates_a, bases_a
        policy_a = FeePolicy(
            fee_rate=sum(rates_a) / len(rates_a),
            base_fee=int(round(sum(bases_a) / len(bases_a))),
        )
        policy_b = FeePolicy(
            fee_rate=sum(rates_b) / len(rates_b),
            base_fee=int(round(sum(bases_b) / len(bases_b))),
        )
        channels.append(
            PaymentChannel(
                node_a=a,
                node_b=b,
                capacity=capacity,
                policy_a=policy_a,
                policy_b=policy_b,
                min_htlc=min(entry["minh"]),
                channel_ids=tuple(entry["cap_by_id"]),
            )
        )
    return channels


def channel_to_records(channel: PaymentChannel) -> list[ChannelRecord]:
    """Expand an aggregated channel back into its two directed records.

    The inverse of aggregation on already-aggregated input; used when
    emitting localized subgraphs in snapshot format.
    """
    channel_id = channel.channel_ids[0] if channel.channel_ids else f"{channel.node_a}x{channel.node_b}"
    capacity_sat = channel.capacity // MSAT_PER_SAT
    common = dict(
        channel_id=channel_id,
        capacity=capacity_sat,
        min_htlc=channel.min_htlc,
        last_update=0,
    )
    return [
        ChannelRecord(
            source_id=channel.node_a,
            target_id=channel.node_b,
            base_fee=channel.policy_a.base_fee,
            fee_rate=channel.policy_a.fee_rate,
            **common,
        ),
        ChannelRecord(
            source_id=channel.node_b,
            target_id=channel.node_a,
            base_fee=channel.policy_b.base_fee,
            fee_rate=channel.policy_b.fee_rate,
            **common,
        ),
    ]


# --- balance initialization ---


def split_half(capacity: int) -> tuple[int, int]:
    """HalfHalf split: the extra msat of an odd capacity goes to the first
    (lexicographically smaller) endpoint."""
    low = capacity // 2
    return capacity - low, low


def init_balances(
    channels: list[PaymentChannel], mode: BalanceInitMode
) -> list[PaymentChannel]:
    """Return copies of the channels with balances set according to mode.

    Conservation (balance_a + balance_b == capacity) holds in every mode.
    UniformRandom draws one balance per channel, in list order, from a
    numpy PCG64 generator seeded with mode.seed.
    """
    rng = None
    if isinstance(mode, UniformRandom):
        rng = np.random.default_rng(mode.seed)
    out: list[PaymentChannel] = []
    for ch in channels:
        if isinstance(mode, HalfHalf):
            bal_a, bal_b = split_half(ch.capacity)
        elif isinstance(mode, UniformRandom):
            bal_a = int(rng.integers(0, ch.capacity + 1))
            bal_b = ch.capacity - bal_a
        elif isinstance(mode, Manual):
            key = (ch.node_a, ch.node_b)
            rkey = (ch.node_b, ch.node_a)
            if key in mode.balances:
                bal_a, bal_b = mode.balances[key]
            elif rkey in mode.balances:
                bal_b, bal_a = mode.balances[rkey]
            else:
                bal_a, bal_b = split_half(ch.capacity)
            if bal_a < 0 or bal_b < 0 or bal_a + bal_b != ch.capacity:
                raise ManualSumMismatchError(
                    f"balances {bal_a}+{bal_b} != capacity {ch.capacity} "
                    f"for channel {ch.node_a}--{ch.node_b}"
                )
        else:
            raise TypeError(f"unknown balance init mode: {mode!r}")
        out.append(replace(ch, balance_a=bal_a, balance_b=bal_b))
    return out
