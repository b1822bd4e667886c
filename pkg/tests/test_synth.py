"""Traffic synthesis: determinism, profile validation, generator bounds."""

import io

import pytest

from lddos import pcap
from lddos.errors import InvalidProfile
from lddos.features import extract_features
from lddos.flows import assemble
from lddos.synth import (
    LABEL_HEADER,
    FlowLabel,
    TrafficProfile,
    corpus,
    profile_from_dict,
    read_labels,
    synthesize,
    write_labels,
)

MIX = [
    TrafficProfile("slowread", 3, seed=1, span_seconds=60),
    TrafficProfile("slowheaders", 3, seed=2, span_seconds=60),
    TrafficProfile("slowbody", 3, seed=3, span_seconds=60),
    TrafficProfile("legit-get", 4, client_count=2, seed=4, span_seconds=60),
    TrafficProfile("throttled-post", 3, rate_limit=11520, seed=5, span_seconds=60),
]


def capture_bytes(records):
    buf = io.BytesIO()
    pcap.write_capture(buf, records)
    return buf.getvalue()


def flows_of(records):
    segs = pcap.iter_tcp_segments(io.BytesIO(capture_bytes(records)))
    conns = assemble(segs)
    return conns, [extract_features(c) for c in conns]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "ddos", "flow_count": 1},
        {"kind": "legit-get", "flow_count": 1, "rate_limit": 11520},
        {"kind": "throttled-get", "flow_count": 1, "rate_limit": 0},
        {"kind": "throttled-get", "flow_count": 1, "rate_limit": -5},
        {"kind": "legit-get", "flow_count": -1},
        {"kind": "legit-get", "flow_count": 1, "client_count": 0},
        {"kind": "legit-get", "flow_count": 1, "span_seconds": -2.0},
    ],
)
def test_profile_validation_errors(kwargs):
    with pytest.raises(InvalidProfile):
        TrafficProfile(**kwargs).validate()


def test_profile_from_dict_rejects_unknown_fields():
    with pytest.raises(InvalidProfile):
        profile_from_dict({"kind": "legit-get", "flow_count": 1, "bogus": 3})


def test_flow_count_zero_is_empty():
    records, labels = synthesize(TrafficProfile("legit-get", 0))
    assert records == []
    assert labels == []


def test_corpus_deterministic():
    r1, l1 = corpus(MIX, interleave_seed=9)
    r2, l2 = corpus(MIX, interleave_seed=9)
    assert capture_bytes(r1) == capture_bytes(r2)
    assert l1 == l2
    r3, _ = corpus(MIX, interleave_seed=10)
    assert capture_bytes(r1) != capture_bytes(r3)


def test_profile_seed_changes_output():
    a, _ = synthesize(TrafficProfile("legit-get", 2, seed=1))
    b, _ = synthesize(TrafficProfile("legit-get", 2, seed=2))
    assert capture_bytes(a) != capture_bytes(b)


def test_timestamps_are_microsecond_aligned():
    records, _ = corpus(MIX, interleave_seed=3)
    assert all(r.ts_nsec % 1000 == 0 for r in records)


def test_every_flow_assembles_to_one_syn_connection():
    records, labels = corpus(MIX, interleave_seed=7)
    conns, _ = flows_of(records)
    assert len(conns) == len(labels) == sum(p.flow_count for p in MIX)
    assert all(c.saw_syn for c in conns)
    got = {(c.initiator[0], c.initiator[1], c.open_time) for c in conns}
    want = {(lb.src_ip, lb.src_port, lb.open_time) for lb in labels}
    assert got == want


def test_labels_sorted_by_open_time():
    _, labels = corpus(MIX, interleave_seed=7)
    keys = [(lb.open_time, lb.src_ip, lb.src_port) for lb in labels]
    assert keys == sorted(keys)


def test_slowheaders_bounds():
    records, _ = synthesize(TrafficProfile("slowheaders", 1, seed=7))
    conns, feats = flows_of(records)
    assert len(conns) == 1
    f = feats[0]
    assert f.get("min_segmn_size_a2b") <= 8
    assert f.get("idletime_max_a2b") >= 5
    assert f.get("duration") >= 100


def test_slowread_bounds():
    records, _ = synthesize(TrafficProfile("slowread", 4, seed=11))
    _, feats = flows_of(records)
    assert len(feats) == 4
    for f in feats:
        assert f.get("max_win_adv_a2b") <= 256
        assert f.get("duration") >= 50


def test_slowbody_bounds():
    records, _ = synthesize(TrafficProfile("slowbody", 3, seed=13))
    _, feats = flows_of(records)
    for f in feats:
        assert f.get("min_segmn_size_a2b") <= 8
        assert f.get("duration") >= 100


@pytest.mark.parametrize("kind", ["throttled-get", "throttled-post"])
def test_throttled_goodput_near_rate_limit(kind):
    records, _ = synthesize(TrafficProfile(kind, 1, rate_limit=11520, seed=1))
    _, feats = flows_of(records)
    f = feats[0]
    goodput = f.get("unique_bytes_sent_a2b") * 8 / f.get("data_xmit_time_a2b")
    assert goodput == pytest.approx(11520, rel=0.20)


def test_legit_flows_are_fast():
    records, _ = synthesize(TrafficProfile("legit-get", 5, seed=3))
    _, feats = flows_of(records)
    for f in feats:
        assert f.get("duration") < 10


def test_client_count_controls_distinct_sources():
    records, labels = synthesize(
        TrafficProfile("legit-get", 10, client_count=5, seed=2)
    )
    ips = {lb.src_ip for lb in labels}
    assert len(ips) == 5
    # ports distinguish flows that share an address
    assert len({(lb.src_ip, lb.src_port) for lb in labels}) == 10
    conns, _ = flows_of(records)
    assert len(conns) == 10


def test_attack_label_assignment():
    _, labels = corpus(MIX, interleave_seed=1)
    attack = sum(1 for lb in labels if lb.label == "attack")
    assert attack == 9
    assert sum(1 for lb in labels if lb.label == "legit") == 7


def test_labels_roundtrip(tmp_path):
    _, labels = corpus(MIX[:2], interleave_seed=4)
    path = tmp_path / "labels.csv"
    write_labels(str(path), labels)
    assert read_labels(str(path)) == labels


def test_labels_bad_header(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("src,sport,dst,dport,when,verdict\n")
    with pytest.raises(InvalidProfile):
        read_labels(str(path))


def test_label_header_shape():
    assert LABEL_HEADER == [
        "src_ip", "src_port", "dst_ip", "dst_port", "open_time", "label"
    ]
    lb = FlowLabel("10.0.0.1", 1024, "172.16.0.10", 80, 1.5, "legit")
    assert lb.open_time == 1.5
