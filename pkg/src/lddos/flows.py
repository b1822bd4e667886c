"""Assembly of decoded TCP segments into bidirectional connections.

A connection is keyed by its canonically ordered endpoint pair and owns
every segment exchanged between those endpoints until it terminates.
Termination causes, first event wins: FIN exchange completed from both
sides, any RST, a silence gap longer than the idle timeout, or the end
of the capture.  A pure SYN arriving on a terminated key starts a fresh
connection on the same key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .pcap import ACK, FIN, RST, SYN, TcpSegment

MOD32 = 1 << 32
HALF32 = 1 << 31

FIN_COMPLETE = "FIN-complete"
RST_TERM = "RST"
IDLE_TIMEOUT = "idle-timeout"
CAPTURE_END = "capture-end"

DEFAULT_IDLE_TIMEOUT = 300.0

Endpoint = tuple[str, int]


def serial_geq(a: int, b: int) -> bool:
    """32-bit serial-number comparison: a >= b under RFC 1323 wraparound."""
    return (a - b) % MOD32 < HALF32


def _ip_u32(ip: str) -> int:
    p = ip.split(".")
    return (int(p[0]) << 24) | (int(p[1]) << 16) | (int(p[2]) << 8) | int(p[3])


def endpoint_order(ep: Endpoint) -> tuple[int, int]:
    """Sortable token: numeric address then port."""
    return (_ip_u32(ep[0]), ep[1])


@dataclass(frozen=True, slots=True)
class ConnectionKey:
    """Endpoint pair in canonical order; identical for both directions."""

    endpoint_lo: Endpoint
    endpoint_hi: Endpoint

    @classmethod
    def of_segment(cls, seg: TcpSegment) -> "ConnectionKey":
        a = (seg.src_ip, seg.src_port)
        b = (seg.dst_ip, seg.dst_port)
        if endpoint_order(a) <= endpoint_order(b):
            return cls(a, b)
        return cls(b, a)

    def sort_token(self):
        return (endpoint_order(self.endpoint_lo), endpoint_order(self.endpoint_hi))


@dataclass
class Connection:
    """One assembled conversation.

    Direction a2b runs from the initiator (first SYN sender) to the
    responder; `timeline` preserves the original arrival interleaving as
    (from_initiator, segment) pairs.
    """

    key: ConnectionKey
    initiator: Endpoint
    responder: Endpoint
    segments_a2b: list[TcpSegment]
    segments_b2a: list[TcpSegment]
    open_time: float
    close_time: float
    termination: str
    saw_syn: bool
    timeline: list[tuple[bool, TcpSegment]]

    def isn(self, from_initiator: bool) -> int | None:
        """Sequence number of the earliest SYN in the given direction."""
        segs = self.segments_a2b if from_initiator else self.segments_b2a
        for seg in segs:
            if seg.has(SYN):
                return seg.seq
        return None


@dataclass
class AssemblyCounters:
    """Anomaly tallies; assembly itself never fails."""

    connections: int = 0
    segments: int = 0
    segments_after_close: int = 0
    syn_retransmits: int = 0

    def as_dict(self) -> dict:
        return {
            "connections": self.connections,
            "segments": self.segments,
            "segments_after_close": self.segments_after_close,
            "syn_retransmits": self.syn_retransmits,
        }


class _FinState:
    __slots__ = ("fin_ack_target", "fin_acked")

    def __init__(self):
        self.fin_ack_target: int | None = None  # ack value that covers the FIN
        self.fin_acked = False


class _Pending:
    """Mutable in-flight connection state inside the assembler."""

    __slots__ = (
        "key", "timeline", "last_time", "terminated",
        "syn_senders", "first_syn", "fin", "first_sender",
    )

    def __init__(self, key: ConnectionKey):
        self.key = key
        self.timeline: list[tuple[Endpoint, TcpSegment]] = []
        self.last_time = 0.0
        self.terminated: str | None = None
        self.syn_senders: set[Endpoint] = set()
        # (timestamp, canonical order, endpoint) of the best first-SYN candidate
        self.first_syn: tuple[float, tuple[int, int], Endpoint] | None = None
        self.fin: dict[Endpoint, _FinState] = {}
        self.first_sender: Endpoint | None = None

    def add(self, seg: TcpSegment, counters: AssemblyCounters) -> None:
        sender = (seg.src_ip, seg.src_port)
        if self.first_sender is None:
            self.first_sender = sender
        if self.terminated is not None:
            counters.segments_after_close += 1
            self.timeline.append((sender, seg))
            self.last_time = seg.timestamp
            return

        if seg.has(SYN):
            if sender in self.syn_senders:
                counters.syn_retransmits += 1
            self.syn_senders.add(sender)
            cand = (seg.timestamp, endpoint_order(sender), sender)
            if self.first_syn is None or cand[:2] < self.first_syn[:2]:
                self.first_syn = cand

        self.timeline.append((sender, seg))
        self.last_time = seg.timestamp

        if seg.has(FIN):
            state = self.fin.setdefault(sender, _FinState())
            if state.fin_ack_target is None:
                state.fin_ack_target = (seg.seq + seg.payload_len + 1) % MOD32
        if seg.has(ACK):
            for ep, state in self.fin.items():
                if ep != sender and state.fin_ack_target is not None:
                    if serial_geq(seg.ack, state.fin_ack_target):
                        state.fin_acked = True
            if len(self.fin) == 2 and all(s.fin_acked for s in self.fin.values()):
                self.terminated = FIN_COMPLETE
        if self.terminated is None and seg.has(RST):
            self.terminated = RST_TERM

    def finalize(self, cause: str) -> Connection:
        if self.first_syn is not None:
            initiator = self.first_syn[2]
        else:
            initiator = self.first_sender
        lo, hi = self.key.endpoint_lo, self.key.endpoint_hi
        responder = hi if initiator == lo else lo
        a2b = [s for snd, s in self.timeline if snd == initiator]
        b2a = [s for snd, s in self.timeline if snd != initiator]
        return Connection(
            key=self.key,
            initiator=initiator,
            responder=responder,
            segments_a2b=a2b,
            segments_b2a=b2a,
            open_time=self.timeline[0][1].timestamp,
            close_time=self.timeline[-1][1].timestamp,
            termination=cause,
            saw_syn=self.first_syn is not None,
            timeline=[(snd == initiator, s) for snd, s in self.timeline],
        )


def _is_pure_syn(seg: TcpSegment) -> bool:
    return seg.has(SYN) and not seg.has(ACK)


def assemble(
    segments: Iterable[TcpSegment],
    idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
    counters: AssemblyCounters | None = None,
) -> list[Connection]:
    """Partition segments into connections; emits them ordered by
    (open_time, key) so any given input yields one canonical output."""
    if counters is None:
        counters = AssemblyCounters()
    ordered = sorted(segments, key=lambda s: s.timestamp)  # stable
    pending: dict[ConnectionKey, _Pending] = {}
    done: list[Connection] = []

    for seg in ordered:
        counters.segments += 1
        key = ConnectionKey.of_segment(seg)
        p = pending.get(key)
        if p is not None and seg.timestamp - p.last_time > idle_timeout:
            done.append(p.finalize(p.terminated or IDLE_TIMEOUT))
            del pending[key]
            p = None
        if p is not None and p.terminated is not None and _is_pure_syn(seg):
            done.append(p.finalize(p.terminated))
            del pending[key]
            p = None
        if p is None:
            p = _Pending(key)
            pending[key] = p
        p.add(seg, counters)

    for p in pending.values():
        done.append(p.finalize(p.terminated or CAPTURE_END))

    done.sort(key=lambda c: (c.open_time, c.key.sort_token(), c.close_time))
    counters.connections = len(done)
    return done


def count_flows(
    connections: Sequence[Connection],
    predicate: Callable[[Connection], bool] | None = None,
) -> int:
    """Count connections matching a predicate (all of them when None)."""
    if predicate is None:
        return len(connections)
    return sum(1 for c in connections if predicate(c))
