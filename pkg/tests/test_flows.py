"""Connection assembly: keys, initiator election, termination causes."""

import pytest

from lddos.flows import (
    AssemblyCounters,
    ConnectionKey,
    assemble,
    count_flows,
    serial_geq,
)
from lddos.pcap import ACK, FIN, PSH, RST, SYN, TcpSegment

A = ("10.0.0.1", 40000)
B = ("10.0.0.2", 80)
C = ("10.0.0.3", 80)


def seg(t, src, dst, seq=0, ack=0, flags=ACK, length=0, win=8000):
    return TcpSegment(
        timestamp=t,
        src_ip=src[0],
        dst_ip=dst[0],
        src_port=src[1],
        dst_port=dst[1],
        seq=seq,
        ack=ack,
        flags=flags,
        window_raw=win,
        payload_len=length,
    )


def handshake(t0, client, server, isn_c=1000, isn_s=5000):
    return [
        seg(t0, client, server, seq=isn_c, flags=SYN),
        seg(t0 + 0.01, server, client, seq=isn_s, ack=isn_c + 1, flags=SYN | ACK),
        seg(t0 + 0.02, client, server, seq=isn_c + 1, ack=isn_s + 1, flags=ACK),
    ]


def test_serial_geq():
    assert serial_geq(5, 3)
    assert not serial_geq(3, 5)
    assert serial_geq(7, 7)
    assert serial_geq(10, 2**32 - 10)  # wrapped past zero
    assert not serial_geq(2**32 - 10, 10)


def test_key_canonical_for_both_directions():
    k1 = ConnectionKey.of_segment(seg(0, A, B))
    k2 = ConnectionKey.of_segment(seg(0, B, A))
    assert k1 == k2
    assert k1.endpoint_lo == A
    # same host: ports decide
    p1 = ("10.0.0.1", 999)
    k3 = ConnectionKey.of_segment(seg(0, A, p1))
    assert k3.endpoint_lo == p1


def test_initiator_is_first_syn_sender():
    # the numerically higher endpoint opens; direction a2b must follow it
    segs = handshake(0.0, B, A)
    segs.append(seg(0.03, B, A, seq=5001, ack=1001, length=30, flags=ACK | PSH))
    (conn,) = assemble(segs)
    assert conn.initiator == B
    assert conn.responder == A
    assert len(conn.segments_a2b) == 3
    assert conn.segments_a2b[-1].payload_len == 30
    assert conn.saw_syn
    assert conn.isn(True) == 1000
    assert conn.isn(False) == 5000


def test_simultaneous_syn_tie_breaks_to_lower_endpoint():
    segs = [
        seg(0.0, B, A, seq=50, flags=SYN),
        seg(0.0, A, B, seq=10, flags=SYN),
    ]
    (conn,) = assemble(segs)
    assert conn.initiator == A


def test_fin_complete():
    segs = handshake(0.0, A, B)
    segs += [
        seg(0.05, A, B, seq=1001, ack=5001, length=100, flags=ACK | PSH),
        seg(0.06, B, A, seq=5001, ack=1101, flags=ACK),
        seg(0.10, A, B, seq=1101, ack=5001, flags=FIN | ACK),
        seg(0.11, B, A, seq=5001, ack=1102, flags=FIN | ACK),
        seg(0.12, A, B, seq=1102, ack=5002, flags=ACK),
    ]
    (conn,) = assemble(segs)
    assert conn.termination == "FIN-complete"
    assert conn.open_time == 0.0
    assert conn.close_time == 0.12


def test_fin_without_final_ack_is_capture_end():
    segs = handshake(0.0, A, B)
    segs += [
        seg(0.10, A, B, seq=1001, ack=5001, flags=FIN | ACK),
        seg(0.11, B, A, seq=5001, ack=1002, flags=FIN | ACK),
        # nobody acknowledges the responder's FIN
    ]
    (conn,) = assemble(segs)
    assert conn.termination == "capture-end"


def test_rst_termination():
    segs = handshake(0.0, A, B)
    segs.append(seg(0.2, B, A, seq=5001, ack=1001, flags=RST | ACK))
    (conn,) = assemble(segs)
    assert conn.termination == "RST"


def test_idle_timeout_splits_same_key():
    first = handshake(0.0, A, B)
    second = handshake(100.0, A, B, isn_c=9000, isn_s=400)
    conns = assemble(first + second, idle_timeout=5.0)
    assert [c.termination for c in conns] == ["idle-timeout", "capture-end"]
    assert conns[0].close_time == pytest.approx(0.02)
    assert conns[1].open_time == 100.0
    # the default timeout keeps the lull inside one connection
    (merged,) = assemble(first + second)
    assert merged.termination == "capture-end"
    assert len(merged.timeline) == 6


def test_gap_after_termination_keeps_original_cause():
    segs = handshake(0.0, A, B)
    segs.append(seg(0.2, B, A, seq=5001, ack=1001, flags=RST))
    segs.append(seg(500.0, A, B, seq=1001, ack=5001, flags=ACK))
    conns = assemble(segs)
    assert [c.termination for c in conns] == ["RST", "capture-end"]
    assert not conns[1].saw_syn


def test_segments_after_close_counted():
    segs = handshake(0.0, A, B)
    segs.append(seg(0.2, B, A, seq=5001, ack=1001, flags=RST))
    segs.append(seg(0.3, A, B, seq=1001, ack=5001, flags=ACK))
    segs.append(seg(0.4, A, B, seq=1001, ack=5001, flags=ACK))
    counters = AssemblyCounters()
    (conn,) = assemble(segs, counters=counters)
    assert conn.termination == "RST"
    assert counters.segments_after_close == 2
    assert conn.close_time == 0.4
    assert len(conn.timeline) == 6


def test_pure_syn_reopens_terminated_key():
    segs = handshake(0.0, A, B)
    segs.append(seg(0.2, A, B, seq=1001, ack=5001, flags=RST))
    segs += handshake(1.0, A, B, isn_c=7000, isn_s=100)
    conns = assemble(segs)
    assert len(conns) == 2
    assert conns[0].termination == "RST"
    assert conns[1].saw_syn
    assert conns[1].isn(True) == 7000


def test_syn_ack_does_not_reopen():
    segs = handshake(0.0, A, B)
    segs.append(seg(0.2, A, B, seq=1001, ack=5001, flags=RST))
    segs.append(seg(0.3, B, A, seq=100, ack=7001, flags=SYN | ACK))
    counters = AssemblyCounters()
    (conn,) = assemble(segs, counters=counters)
    assert counters.segments_after_close == 1


def test_syn_retransmits_counted():
    segs = [
        seg(0.0, A, B, seq=1000, flags=SYN),
        seg(1.0, A, B, seq=1000, flags=SYN),
        seg(2.0, A, B, seq=1000, flags=SYN),
    ]
    counters = AssemblyCounters()
    (conn,) = assemble(segs, counters=counters)
    assert counters.syn_retransmits == 2
    assert conn.saw_syn


def test_emit_order_by_open_time_then_key():
    late = handshake(5.0, A, B)
    early = handshake(1.0, A, C)
    tie_low = [seg(3.0, A, ("10.0.0.1", 50000), seq=1, flags=SYN)]
    tie_high = [seg(3.0, ("10.0.0.9", 1), ("10.0.0.9", 2), seq=1, flags=SYN)]
    conns = assemble(late + tie_high + early + tie_low)
    opens = [c.open_time for c in conns]
    assert opens == [1.0, 3.0, 3.0, 5.0]
    assert conns[1].key.endpoint_lo == A  # lower key wins the tie
    assert conns[3].initiator == A


def test_count_flows():
    conns = assemble(handshake(0.0, A, B) + handshake(0.0, A, C))
    assert count_flows(conns) == 2
    assert count_flows(conns, lambda c: c.responder == B) == 1


def test_counters_as_dict():
    counters = AssemblyCounters()
    assemble(handshake(0.0, A, B), counters=counters)
    d = counters.as_dict()
    assert d["connections"] == 1
    assert d["segments"] == 3
    assert d["segments_after_close"] == 0
    assert d["syn_retransmits"] == 0
