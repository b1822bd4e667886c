"""Per-connection feature computation.

Every feature is produced for both directions (a2b = initiator to
responder, b2a = reverse) plus the connection-level duration, 49 numeric
values in a fixed schema order.  The "table3" preset names the curated
14-feature subset used by the detection models; its spellings (including
"max_#_retrans_a2b" and "min_segmn_size_a2b") are part of the external
interface and must not be changed.

Definitions frozen here:
  - effective window = raw window << the scale announced in the sending
    side's own SYN, applied to every segment of that side (including the
    SYN itself) but only when both SYNs carried the window-scale option;
  - unique bytes = size of the union of [seq, seq+len) data intervals,
    sequence numbers unwrapped from 32-bit serial space to 64 bits;
  - owin sampled at each data send: highest sent sequence end minus the
    highest cumulative ack received from the peer (starting at ISN+1);
  - max_#_retrans = (max times any single byte was carried) - 1;
  - initial window = unique bytes / data segments sent before the first
    pure ACK from the peer covering at least one data byte; if no such
    ACK ever arrives the whole direction counts;
  - a duplicate ACK repeats the current highest ack value in a pure ACK
    with unchanged effective window; one triple-dupack event fires per
    run, on the run's third duplicate;
  - throughput = unique bytes / whole-connection duration.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, fields
from typing import NamedTuple

from .flows import Connection
from .pcap import ACK, FIN, RST, SYN, TcpSegment

MOD32 = 1 << 32
HALF32 = 1 << 31


class Unwrap32(object):
    """Unwraps a stream of 32-bit serial numbers into a 64-bit space.

    Consecutive observations are assumed to lie within 2^31 of each
    other, the standard serial-arithmetic condition.
    """

    __slots__ = ("_prev",)

    def __init__(self):
        self._prev: int | None = None

    def unwrap(self, value: int) -> int:
        if self._prev is None:
            self._prev = value
            return value
        delta = (value - self._prev) % MOD32
        if delta >= HALF32:
            delta -= MOD32
        self._prev += delta
        return self._prev


class _IntervalUnion:
    """Disjoint sorted union of half-open integer intervals."""

    __slots__ = ("starts", "ends", "total")

    def __init__(self):
        self.starts: list[int] = []
        self.ends: list[int] = []
        self.total = 0

    def overlap(self, s: int, e: int) -> int:
        """Bytes of [s, e) already covered."""
        got = 0
        i = bisect.bisect_right(self.ends, s)
        while i < len(self.starts) and self.starts[i] < e:
            got += min(e, self.ends[i]) - max(s, self.starts[i])
            i += 1
        return got

    def add(self, s: int, e: int) -> None:
        if e <= s:
            return
        lo = bisect.bisect_left(self.ends, s)
        hi = bisect.bisect_right(self.starts, e)
        if lo < hi:
            new_s = min(s, self.starts[lo])
            new_e = max(e, self.ends[hi - 1])
            removed = sum(self.ends[k] - self.starts[k] for k in range(lo, hi))
            del self.starts[lo:hi]
            del self.ends[lo:hi]
            self.starts.insert(lo, new_s)
            self.ends.insert(lo, new_e)
            self.total += (new_e - new_s) - removed
        else:
            self.starts.insert(lo, s)
            self.ends.insert(lo, e)
            self.total += e - s


@dataclass
class DirectionFeatures:
    """All per-direction features for one side of a connection."""

    total_packets: int = 0
    data_pkts: int = 0
    pure_acks: int = 0
    syn_count: int = 0
    fin_count: int = 0
    resets_sent: int = 0
    unique_bytes_sent: int = 0
    retrans_data_pkts: int = 0
    max_retrans: int = 0
    min_segmn_size: int = 0
    avg_segmn_size: float = 0.0
    max_segmn_size: int = 0
    avg_win_adv: float = 0.0
    min_win_adv: int = 0
    max_win_adv: int = 0
    zero_win_adv_count: int = 0
    initial_window_bytes: int = 0
    initial_window_pkts: int = 0
    max_owin: int = 0
    avg_owin: float = 0.0
    data_xmit_time: float = 0.0
    idletime_max: float = 0.0
    throughput: float = 0.0
    triple_dupacks: int = 0


@dataclass
class FlowFeatures:
    """Feature bundle for one connection: both directions plus duration."""

    a2b: DirectionFeatures
    b2a: DirectionFeatures
    duration: float
    saw_syn: bool

    def get(self, name: str) -> float:
        if name == "duration":
            return self.duration
        if name.endswith("_a2b"):
            side, stem = self.a2b, name[:-4]
        elif name.endswith("_b2a"):
            side, stem = self.b2a, name[:-4]
        else:
            raise KeyError(name)
        return getattr(side, _STEM_TO_ATTR.get(stem, stem))

    def vector(self, names: list[str] | None = None) -> list[float]:
        if names is None:
            names = FEATURE_NAMES
        return [float(self.get(n)) for n in names]


class FeatureSpec(NamedTuple):
    name: str
    unit: str
    direction: str


# schema-name stem -> attribute name, where they differ ("#" is not a
# valid identifier character)
_STEM_TO_ATTR = {"max_#_retrans": "max_retrans"}

_STEM_UNITS = [
    ("total_packets", "count"),
    ("data_pkts", "count"),
    ("pure_acks", "count"),
    ("syn_count", "count"),
    ("fin_count", "count"),
    ("resets_sent", "count"),
    ("unique_bytes_sent", "bytes"),
    ("retrans_data_pkts", "count"),
    ("max_#_retrans", "count"),
    ("min_segmn_size", "bytes"),
    ("avg_segmn_size", "bytes"),
    ("max_segmn_size", "bytes"),
    ("avg_win_adv", "bytes"),
    ("min_win_adv", "bytes"),
    ("max_win_adv", "bytes"),
    ("zero_win_adv_count", "count"),
    ("initial_window_bytes", "bytes"),
    ("initial_window_pkts", "count"),
    ("max_owin", "bytes"),
    ("avg_owin", "bytes"),
    ("data_xmit_time", "seconds"),
    ("idletime_max", "seconds"),
    ("throughput", "bytes/s"),
    ("triple_dupacks", "count"),
]


def feature_schema() -> list[FeatureSpec]:
    """Stable ordered schema: every a2b feature, every b2a feature,
    then the connection duration."""
    out = [FeatureSpec(f"{stem}_a2b", unit, "a2b") for stem, unit in _STEM_UNITS]
    out += [FeatureSpec(f"{stem}_b2a", unit, "b2a") for stem, unit in _STEM_UNITS]
    out.append(FeatureSpec("duration", "seconds", "conn"))
    return out


FEATURE_NAMES: list[str] = [spec.name for spec in feature_schema()]

# Curated subsets selectable by name on the command line / API.
FEATURE_PRESETS: dict[str, list[str]] = {
    "table3": [
        "avg_win_adv_a2b",
        "data_xmit_time_a2b",
        "max_win_adv_a2b",
        "throughput_a2b",
        "max_owin_a2b",
        "resets_sent_a2b",
        "avg_owin_a2b",
        "max_#_retrans_a2b",
        "min_segmn_size_a2b",
        "initial_window_bytes_a2b",
        "idletime_max_a2b",
        "idletime_max_b2a",
        "triple_dupacks_a2b",
        "unique_bytes_sent_a2b",
    ],
    "all": list(FEATURE_NAMES),
}


def resolve_feature_names(spec: str | list[str] | None) -> list[str]:
    """Map a preset name, comma-joined string, or explicit list to
    schema feature names, validating each against the schema."""
    if spec is None:
        return list(FEATURE_NAMES)
    if isinstance(spec, str):
        if spec in FEATURE_PRESETS:
            return list(FEATURE_PRESETS[spec])
        names = [s.strip() for s in spec.split(",") if s.strip()]
    else:
        names = list(spec)
    known = set(FEATURE_NAMES)
    for n in names:
        if n not in known:
            raise KeyError(f"unknown feature {n!r}")
    return names


class _DirState:
    """Accumulator for one direction during the chronological walk."""

    __slots__ = (
        "total", "data_pkts", "pure_acks", "syn", "fin", "rst",
        "min_sz", "max_sz", "sum_sz",
        "win_min", "win_max", "win_sum", "win_zero",
        "first_data_t", "last_data_t",
        "union", "cover", "retrans_pkts", "min_data_seq", "highest_end",
        "peer_ack", "owin_n", "owin_sum", "owin_max",
        "iw_done", "iw_bytes", "iw_pkts",
        "prev_t", "idle_max",
        "dup_last", "dup_count", "dup_highest", "dup_events",
    )

    def __init__(self):
        self.total = 0
        self.data_pkts = 0
        self.pure_acks = 0
        self.syn = 0
        self.fin = 0
        self.rst = 0
        self.min_sz: int | None = None
        self.max_sz = 0
        self.sum_sz = 0
        self.win_min: int | None = None
        self.win_max = 0
        self.win_sum = 0
        self.win_zero = 0
        self.first_data_t: float | None = None
        self.last_data_t: float | None = None
        self.union = _IntervalUnion()
        self.cover: list[tuple[int, int]] = []
        self.retrans_pkts = 0
        self.min_data_seq: int | None = None
        self.highest_end: int | None = None
        self.peer_ack: int | None = None
        self.owin_n = 0
        self.owin_sum = 0
        self.owin_max = 0
        self.iw_done = False
        self.iw_bytes = 0
        self.iw_pkts = 0
        self.prev_t: float | None = None
        self.idle_max = 0.0
        self.dup_last: tuple[int, int] | None = None
        self.dup_count = 0
        self.dup_highest: int | None = None
        self.dup_events = 0


def _negotiated_scales(conn: Connection) -> tuple[int, int]:
    """Window-scale shifts for (a, b); zero unless both SYNs carried
    the option."""
    a_ws = b_ws = None
    for seg in conn.segments_a2b:
        if seg.has(SYN):
            a_ws = seg.window_scale_option
            break
    for seg in conn.segments_b2a:
        if seg.has(SYN):
            b_ws = seg.window_scale_option
            break
    if a_ws is None or b_ws is None:
        return 0, 0
    return a_ws, b_ws


def extract_features(conn: Connection) -> FlowFeatures:
    """Compute the full feature bundle for one connection."""
    scale_a, scale_b = _negotiated_scales(conn)
    scale = {True: scale_a, False: scale_b}
    # one 64-bit sequence space per side's byte stream: a side's seqs and
    # the peer's acks of them live in the same space
    space = {True: Unwrap32(), False: Unwrap32()}
    st = {True: _DirState(), False: _DirState()}

    for from_a, seg in conn.timeline:
        s = st[from_a]
        p = st[not from_a]
        t = seg.timestamp
        seq_u = space[from_a].unwrap(seg.seq)
        ack_u = space[not from_a].unwrap(seg.ack) if seg.has(ACK) else None
        win_eff = seg.window_raw << scale[from_a]
        pure = (
            seg.payload_len == 0
            and seg.has(ACK)
            and not (seg.flags & (SYN | FIN | RST))
        )

        s.total += 1
        if pure:
            s.pure_acks += 1
        if seg.has(SYN):
            s.syn += 1
            if s.peer_ack is None:
                s.peer_ack = seq_u + 1  # nothing acked until beyond ISN
        if seg.has(FIN):
            s.fin += 1
        if seg.has(RST):
            s.rst += 1

        s.win_sum += win_eff
        s.win_max = max(s.win_max, win_eff)
        s.win_min = win_eff if s.win_min is None else min(s.win_min, win_eff)
        if win_eff == 0:
            s.win_zero += 1

        if s.prev_t is not None:
            s.idle_max = max(s.idle_max, t - s.prev_t)
        s.prev_t = t

        if ack_u is None:
            s.dup_last = None
            s.dup_count = 0
        else:
            if (
                pure
                and s.dup_last == (ack_u, win_eff)
                and ack_u == s.dup_highest
            ):
                s.dup_count += 1
                if s.dup_count == 3:
                    s.dup_events += 1
            else:
                s.dup_count = 0
            s.dup_last = (ack_u, win_eff)
            if s.dup_highest is None or ack_u > s.dup_highest:
                s.dup_highest = ack_u

        if seg.payload_len > 0:
            size = seg.payload_len
            s.data_pkts += 1
            s.sum_sz += size
            s.max_sz = max(s.max_sz, size)
            s.min_sz = size if s.min_sz is None else min(s.min_sz, size)
            if s.first_data_t is None:
                s.first_data_t = t
            s.last_data_t = t
            start, end = seq_u, seq_u + size
            if s.union.overlap(start, end) > 0:
                s.retrans_pkts += 1
            s.union.add(start, end)
            s.cover.append((start, end))
            s.min_data_seq = start if s.min_data_seq is None else min(s.min_data_seq, start)
            s.highest_end = end if s.highest_end is None else max(s.highest_end, end)
            if s.peer_ack is None:
                s.peer_ack = start  # no SYN, no acks yet: everything is outstanding
            sample = max(0, s.highest_end - s.peer_ack)
            s.owin_n += 1
            s.owin_sum += sample
            s.owin_max = max(s.owin_max, sample)

        if ack_u is not None:
            # this segment acknowledges the peer direction's bytes
            if p.peer_ack is None or ack_u > p.peer_ack:
                p.peer_ack = ack_u
            if (
                pure
                and not p.iw_done
                and p.min_data_seq is not None
                and ack_u > p.min_data_seq
            ):
                p.iw_done = True
                p.iw_bytes = p.union.total
                p.iw_pkts = p.data_pkts

    duration = conn.close_time - conn.open_time
    return FlowFeatures(
        a2b=_finish(st[True], duration),
        b2a=_finish(st[False], duration),
        duration=duration,
        saw_syn=conn.saw_syn,
    )


def _max_coverage(cover: list[tuple[int, int]]) -> int:
    events: list[tuple[int, int]] = []
    for s, e in cover:
        events.append((s, 1))
        events.append((e, -1))
    events.sort()
    cur = best = 0
    for _, delta in events:
        cur += delta
        if cur > best:
            best = cur
    return best


def _finish(s: _DirState, duration: float) -> DirectionFeatures:
    if not s.iw_done:
        # no qualifying ACK ever arrived: the whole direction counts
        s.iw_bytes = s.union.total
        s.iw_pkts = s.data_pkts
    unique = s.union.total
    return DirectionFeatures(
        total_packets=s.total,
        data_pkts=s.data_pkts,
        pure_acks=s.pure_acks,
        syn_count=s.syn,
        fin_count=s.fin,
        resets_sent=s.rst,
        unique_bytes_sent=unique,
        retrans_data_pkts=s.retrans_pkts,
        max_retrans=_max_coverage(s.cover) - 1 if s.cover else 0,
        min_segmn_size=s.min_sz or 0,
        avg_segmn_size=s.sum_sz / s.data_pkts if s.data_pkts else 0.0,
        max_segmn_size=s.max_sz,
        avg_win_adv=s.win_sum / s.total if s.total else 0.0,
        min_win_adv=s.win_min or 0,
        max_win_adv=s.win_max,
        zero_win_adv_count=s.win_zero,
        initial_window_bytes=s.iw_bytes,
        initial_window_pkts=s.iw_pkts,
        max_owin=s.owin_max,
        avg_owin=s.owin_sum / s.owin_n if s.owin_n else 0.0,
        data_xmit_time=(
            s.last_data_t - s.first_data_t if s.data_pkts >= 2 else 0.0
        ),
        idletime_max=s.idle_max,
        throughput=unique / duration if duration > 0 else 0.0,
        triple_dupacks=s.dup_events,
    )
