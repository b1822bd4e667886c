"""Deterministic synthesis of labeled TCP traffic captures.

Seven flow kinds are generated: legit-get and legit-post browsing
conversations, their rate-throttled variants (the hard negatives, client
goodput paced to a configured bits/second), and the three low-rate
attacks: slowread (tiny advertised windows draining a response through
sparse window updates), slowheaders (request header bytes trickled in
1-8 B fragments, never completed) and slowbody (headers sent normally,
declared body trickled).

Generation is a pure function of the profile and its seed: every random
draw comes from a per-flow generator derived by hashing (seed, flow
index), so captures are byte-identical across runs and platforms.
Payload bytes are zeros and checksums are left zero; the decoder does
not verify them and real stacks emit zero checksums under offload.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidProfile
from .pcap import ACK, FIN, PSH, RST, SYN, PacketRecord, to_seconds
from .utils import make_rng

LEGIT_KINDS = ("legit-get", "legit-post")
THROTTLED_KINDS = ("throttled-get", "throttled-post")
ATTACK_KINDS = ("slowread", "slowheaders", "slowbody")
ALL_KINDS = LEGIT_KINDS + THROTTLED_KINDS + ATTACK_KINDS

DEFAULT_RATE_LIMIT = 11520  # bits/second
MSS = 1460

LABEL_HEADER = ["src_ip", "src_port", "dst_ip", "dst_port", "open_time", "label"]


@dataclass(frozen=True)
class TrafficProfile:
    """Parameters for one homogeneous batch of flows."""

    kind: str
    flow_count: int
    client_count: int = 1
    rate_limit: int | None = None
    seed: int = 0
    time_jitter: float = 0.02
    size_jitter: float = 1.0
    span_seconds: float = 600.0

    def validate(self) -> None:
        if self.kind not in ALL_KINDS:
            raise InvalidProfile(f"unknown kind {self.kind!r}")
        if self.flow_count < 0:
            raise InvalidProfile("flow_count must be >= 0")
        if self.client_count < 1:
            raise InvalidProfile("client_count must be >= 1")
        if self.rate_limit is not None:
            if self.kind not in THROTTLED_KINDS:
                raise InvalidProfile(
                    f"rate_limit only applies to throttled kinds, not {self.kind!r}"
                )
            if self.rate_limit <= 0:
                raise InvalidProfile("rate_limit must be positive")
        if self.span_seconds < 0:
            raise InvalidProfile("span_seconds must be >= 0")

    @property
    def effective_rate(self) -> int:
        return self.rate_limit if self.rate_limit is not None else DEFAULT_RATE_LIMIT

    @property
    def is_attack(self) -> bool:
        return self.kind in ATTACK_KINDS


@dataclass(frozen=True)
class FlowLabel:
    """Ground truth for one synthesized connection."""

    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    open_time: float
    label: str  # "attack" or "legit"


def profile_from_dict(d: dict) -> TrafficProfile:
    try:
        profile = TrafficProfile(**d)
    except TypeError as exc:
        raise InvalidProfile(str(exc)) from None
    profile.validate()
    return profile


# ---------------------------------------------------------------------------
# frame encoding

_ETH = struct.Struct(">6s6sH")
_IP = struct.Struct(">BBHHHBBH4s4s")
_TCP = struct.Struct(">HHIIHHHH")

_CLIENT_MAC = bytes.fromhex("020000000001")
_SERVER_MAC = bytes.fromhex("020000000002")


def _pack_ip(ip: str) -> bytes:
    a, b, c, d = (int(x) for x in ip.split("."))
    return bytes((a, b, c, d))


def _frame(
    src_ip: str, dst_ip: str, sport: int, dport: int,
    seq: int, ack: int, flags: int, window: int, payload_len: int,
    wscale: int | None = None, mss: int | None = None,
) -> bytes:
    opts = b""
    if mss is not None:
        opts += struct.pack(">BBH", 2, 4, mss)
    if wscale is not None:
        opts += struct.pack(">BBBB", 1, 3, 3, wscale)  # NOP + window scale
    doff = 20 + len(opts)
    total = 20 + doff + payload_len
    ip = _IP.pack(
        0x45, 0, total, 0, 0x4000, 64, 6, 0, _pack_ip(src_ip), _pack_ip(dst_ip)
    )
    tcp = _TCP.pack(sport, dport, seq, ack, ((doff // 4) << 12) | flags, window, 0, 0)
    eth = _ETH.pack(_SERVER_MAC, _CLIENT_MAC, 0x0800)
    return eth + ip + tcp + opts + bytes(payload_len)


# ---------------------------------------------------------------------------
# conversation scripting

@dataclass
class _Planned:
    t: float
    from_client: bool
    flags: int
    payload_len: int = 0
    window: int = 65535
    wscale: int | None = None
    mss: int | None = None


class _Conv:
    """Replays a planned two-party conversation into frames, assigning
    sequence and acknowledgment numbers in delivery order."""

    def __init__(self, c_ip, c_port, s_ip, s_port, c_isn, s_isn):
        self.c_ip, self.c_port = c_ip, c_port
        self.s_ip, self.s_port = s_ip, s_port
        self.snd = {True: c_isn, False: s_isn}
        self.rcv = {True: 0, False: 0}

    def replay(self, plan: list[_Planned]) -> list[tuple[float, bytes]]:
        order = sorted(range(len(plan)), key=lambda i: (plan[i].t, i))
        out = []
        for i in order:
            p = plan[i]
            if p.from_client:
                src, dst = (self.c_ip, self.c_port), (self.s_ip, self.s_port)
            else:
                src, dst = (self.s_ip, self.s_port), (self.c_ip, self.c_port)
            seq = self.snd[p.from_client]
            ack = self.rcv[p.from_client] if p.flags & ACK else 0
            frame = _frame(
                src[0], dst[0], src[1], dst[1],
                seq % (1 << 32), ack % (1 << 32),
                p.flags, p.window, p.payload_len, p.wscale, p.mss,
            )
            consumed = p.payload_len
            if p.flags & SYN:
                consumed += 1
            if p.flags & FIN:
                consumed += 1
            self.snd[p.from_client] += consumed
            self.rcv[not p.from_client] = self.snd[p.from_client]
            out.append((p.t, frame))
        return out


def _chunks(total: int, n: int) -> list[int]:
    """Split total bytes into n near-equal positive chunks."""
    n = min(n, total)
    q, r = divmod(total, n)
    return [q + 1] * r + [q] * (n - r)


def _jit(rng, scale: float) -> float:
    return 1.0 + float(rng.uniform(-scale, scale))


# each generator appends _Planned events for one flow and returns nothing


def _gen_browse(plan, rng, t0, profile, with_body: bool, throttle: int | None):
    jitter = profile.time_jitter
    rtt = float(rng.uniform(0.002, 0.08))
    req = int(rng.integers(200, 801))
    body = int(rng.integers(1024, 50 * 1024 + 1)) if with_body else 0
    resp = int(rng.integers(1024, int(200 * 1024 * profile.size_jitter) + 1))
    c_ws = int(rng.integers(0, 4))
    s_ws = 7
    c_win = int(rng.integers(8192, 65536))
    s_win = int(rng.integers(16384, 65536))
    rst_close = rng.random() < 0.1

    plan.append(_Planned(t0, True, SYN, 0, c_win, c_ws, MSS))
    plan.append(_Planned(t0 + rtt / 2, False, SYN | ACK, 0, s_win, s_ws, MSS))
    t = t0 + rtt
    plan.append(_Planned(t, True, ACK, 0, c_win))

    t += float(rng.uniform(0.0005, 0.003))
    upload = req + body
    if throttle is not None:
        # pace the whole client byte stream so goodput tracks the cap
        rate_bytes = throttle / 8.0
        n = max(10, math.ceil(upload / 720))
        sizes = _chunks(upload, n)
        for i, size in enumerate(sizes):
            if i > 0:
                t += size * 8.0 / throttle * _jit(rng, jitter)
            last = i == len(sizes) - 1
            plan.append(_Planned(t, True, ACK | (PSH if last else 0), size, c_win))
            if i % 2 == 1 or last:
                plan.append(_Planned(t + rtt / 2, False, ACK, 0, s_win))
    else:
        plan.append(_Planned(t, True, ACK | PSH, req, c_win))
        plan.append(_Planned(t + rtt / 2, False, ACK, 0, s_win))
        if body:
            nseg = math.ceil(body / MSS)
            sizes = _chunks(body, nseg)
            for i, size in enumerate(sizes):
                t += float(rng.uniform(0.0001, 0.0004))
                plan.append(_Planned(t, True, ACK | (PSH if i == nseg - 1 else 0), size, c_win))
                if i % 2 == 1 or i == nseg - 1:
                    plan.append(_Planned(t + rtt / 2, False, ACK, 0, s_win))

    # server response at line rate, client acks every other segment
    t = t + rtt / 2 + float(rng.uniform(0.001, 0.05))
    nseg = math.ceil(resp / MSS)
    sizes = _chunks(resp, nseg)
    t_last_ack = t
    for i, size in enumerate(sizes):
        t += float(rng.uniform(0.0001, 0.0004))
        last = i == nseg - 1
        plan.append(_Planned(t, False, ACK | (PSH if last else 0), size, s_win))
        if i % 2 == 1 or last:
            t_last_ack = t + rtt / 2
            plan.append(_Planned(t_last_ack, True, ACK, 0, c_win))

    t = t_last_ack + float(rng.uniform(0.0005, 0.01))
    if rst_close:
        plan.append(_Planned(t, True, RST | ACK, 0, c_win))
    else:
        plan.append(_Planned(t, True, FIN | ACK, 0, c_win))
        plan.append(_Planned(t + rtt / 2, False, FIN | ACK, 0, s_win))
        plan.append(_Planned(t + rtt, True, ACK, 0, c_win))


def _gen_slowread(plan, rng, t0, profile):
    rtt = float(rng.uniform(0.01, 0.1))
    w = int(rng.integers(64, 257))  # raw window, no scaling negotiated
    req = int(rng.integers(200, 801))
    hold = float(rng.uniform(60, 600))
    s_win = 65535

    plan.append(_Planned(t0, True, SYN, 0, w, None, MSS))
    plan.append(_Planned(t0 + rtt / 2, False, SYN | ACK, 0, s_win, None, MSS))
    t = t0 + rtt
    plan.append(_Planned(t, True, ACK, 0, w))
    t += float(rng.uniform(0.0005, 0.005))
    plan.append(_Planned(t, True, ACK | PSH, req, w))
    plan.append(_Planned(t + rtt / 2, False, ACK, 0, s_win))

    # server fills the tiny window, client drains with sparse updates
    t_dribble = t + rtt / 2 + float(rng.uniform(0.001, 0.01))
    plan.append(_Planned(t_dribble, False, ACK, w, s_win))
    while True:
        t_ack = t_dribble + float(rng.uniform(5, 40))
        if t_ack - t0 > hold:
            break
        plan.append(_Planned(t_ack, True, ACK, 0, w))
        t_dribble = t_ack + rtt / 2
        plan.append(_Planned(t_dribble, False, ACK, w, s_win))
    # no close: the server never completes its send


def _gen_slowheaders(plan, rng, t0, profile):
    rtt = float(rng.uniform(0.01, 0.1))
    c_win = int(rng.integers(8192, 65536))
    s_win = int(rng.integers(16384, 65536))
    hold = float(rng.uniform(150, 600))

    plan.append(_Planned(t0, True, SYN, 0, c_win, None, MSS))
    plan.append(_Planned(t0 + rtt / 2, False, SYN | ACK, 0, s_win, None, MSS))
    t = t0 + rtt
    plan.append(_Planned(t, True, ACK, 0, c_win))
    t += float(rng.uniform(0.001, 0.05))
    while t - t0 <= hold:
        frag = int(rng.integers(1, 9))
        plan.append(_Planned(t, True, ACK | PSH, frag, c_win))
        plan.append(_Planned(t + rtt / 2, False, ACK, 0, s_win))
        t += float(rng.uniform(5, 30))
    if rng.random() < 0.5:
        plan.append(_Planned(t + float(rng.uniform(1, 10)), False, RST | ACK, 0, s_win))


def _gen_slowbody(plan, rng, t0, profile):
    rtt = float(rng.uniform(0.01, 0.1))
    c_win = int(rng.integers(8192, 65536))
    s_win = int(rng.integers(16384, 65536))
    headers = int(rng.integers(200, 601))
    hold = float(rng.uniform(150, 600))

    plan.append(_Planned(t0, True, SYN, 0, c_win, None, MSS))
    plan.append(_Planned(t0 + rtt / 2, False, SYN | ACK, 0, s_win, None, MSS))
    t = t0 + rtt
    plan.append(_Planned(t, True, ACK, 0, c_win))
    t += float(rng.uniform(0.0005, 0.005))
    plan.append(_Planned(t, True, ACK | PSH, headers, c_win))  # complete headers
    plan.append(_Planned(t + rtt / 2, False, ACK, 0, s_win))
    t += float(rng.uniform(5, 30))
    while t - t0 <= hold:
        frag = int(rng.integers(1, 9))
        plan.append(_Planned(t, True, ACK | PSH, frag, c_win))
        plan.append(_Planned(t + rtt / 2, False, ACK, 0, s_win))
        t += float(rng.uniform(5, 30))


def _generate_flow(profile: TrafficProfile, rng, t0: float, conv: _Conv):
    plan: list[_Planned] = []
    kind = profile.kind
    if kind == "legit-get":
        _gen_browse(plan, rng, t0, profile, with_body=False, throttle=None)
    elif kind == "legit-post":
        _gen_browse(plan, rng, t0, profile, with_body=True, throttle=None)
    elif kind == "throttled-get":
        _gen_browse(plan, rng, t0, profile, with_body=False, throttle=profile.effective_rate)
    elif kind == "throttled-post":
        _gen_browse(plan, rng, t0, profile, with_body=True, throttle=profile.effective_rate)
    elif kind == "slowread":
        _gen_slowread(plan, rng, t0, profile)
    elif kind == "slowheaders":
        _gen_slowheaders(plan, rng, t0, profile)
    else:
        _gen_slowbody(plan, rng, t0, profile)
    return conv.replay(plan)


def _client_ip(profile_index: int, client_id: int) -> str:
    return f"10.{profile_index % 200}.{client_id // 250}.{client_id % 250 + 1}"


def _server_ip(profile_index: int) -> str:
    return f"172.16.{profile_index % 200}.10"


def _flow_events(profile: TrafficProfile, profile_index: int, phase: float):
    """Yield (t_usec, flow_index, event_index, frame) and labels for every
    flow of one profile."""
    events = []
    labels = []
    server = _server_ip(profile_index)
    for i in range(profile.flow_count):
        rng = make_rng(profile.seed, "flow", profile_index, i)
        t0 = phase + float(rng.uniform(0, profile.span_seconds))
        client_id = i % profile.client_count
        c_ip = _client_ip(profile_index, client_id)
        c_port = 1024 + (i // profile.client_count) % 60000
        conv = _Conv(
            c_ip, c_port, server, 80,
            int(rng.integers(0, 1 << 32)), int(rng.integers(0, 1 << 32)),
        )
        flow = _generate_flow(profile, rng, t0, conv)
        first_us = None
        for k, (t, frame) in enumerate(flow):
            t_us = int(round(t * 1e6))
            if first_us is None:
                first_us = t_us
            events.append((t_us, i, k, frame))
        labels.append(
            FlowLabel(
                c_ip, c_port, server, 80,
                to_seconds(first_us // 1_000_000, (first_us % 1_000_000) * 1000),
                "attack" if profile.is_attack else "legit",
            )
        )
    return events, labels


def _records(events: list[tuple]) -> list[PacketRecord]:
    events.sort(key=lambda e: e[:-1])
    return [
        PacketRecord(t_us // 1_000_000, (t_us % 1_000_000) * 1000, len(frame), frame)
        for (t_us, *_ignored, frame) in events
    ]


def synthesize(
    profile: TrafficProfile, profile_index: int = 0, phase: float = 0.0
) -> tuple[list[PacketRecord], list[FlowLabel]]:
    """Generate one profile's capture records and ground-truth labels."""
    profile.validate()
    events, labels = _flow_events(profile, profile_index, phase)
    return _records(events), labels


def corpus(
    profiles: Sequence[TrafficProfile], interleave_seed: int = 0
) -> tuple[list[PacketRecord], list[FlowLabel]]:
    """Interleave several profiles on one timeline.

    Each profile keeps its own seed; the interleave seed only shifts
    profile start phases.  Timestamp ties order by (profile, flow,
    event) index so output is canonical.
    """
    for p in profiles:
        p.validate()
    all_events = []
    all_labels = []
    for p_idx, profile in enumerate(profiles):
        phase = float(make_rng(interleave_seed, "phase", p_idx).uniform(0, 30))
        events, labels = _flow_events(profile, p_idx, phase)
        all_events.extend(
            (t_us, p_idx, flow_i, k, frame) for (t_us, flow_i, k, frame) in events
        )
        all_labels.extend(labels)
    all_labels.sort(key=lambda lb: (lb.open_time, lb.src_ip, lb.src_port))
    return _records(all_events), all_labels


def write_labels(path: str, labels: Iterable[FlowLabel]) -> None:
    import os
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LABEL_HEADER)
        for lb in labels:
            w.writerow(
                [lb.src_ip, lb.src_port, lb.dst_ip, lb.dst_port,
                 repr(lb.open_time), lb.label]
            )
    os.replace(tmp, path)


def read_labels(path: str) -> list[FlowLabel]:
    out = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != LABEL_HEADER:
            raise InvalidProfile(f"unrecognized label file header: {header}")
        for row in r:
            out.append(
                FlowLabel(row[0], int(row[1]), row[2], int(row[3]),
                          float(row[4]), row[5])
            )
    return out
