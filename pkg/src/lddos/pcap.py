"""Classic capture-file reader/writer and Ethernet/IPv4/TCP frame decoding.

The reader accepts both endiannesses and both timestamp resolutions
(microsecond and nanosecond magics); the writer always emits little-endian
headers so output bytes are identical across platforms.  Record timestamps
are kept as integer (seconds, nanoseconds) pairs so that write(read(x))
is byte-exact even for nanosecond captures.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

from .errors import MalformedFrame, TruncatedHeader, TruncatedRecord, UnknownMagic

MAGIC_MICRO = 0xA1B2C3D4
MAGIC_NANO = 0xA1B23C4D

LINKTYPE_ETHERNET = 1

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_VLAN = 0x8100

# TCP flag bits (low byte of the offset/flags word)
FIN = 0x01
SYN = 0x02
RST = 0x04
PSH = 0x08
ACK = 0x10
URG = 0x20

_GLOBAL_HDR = struct.Struct("<IHHiIII")
_REC_HDR_LE = struct.Struct("<IIII")
_REC_HDR_BE = struct.Struct(">IIII")

SECOND_NS = 1_000_000_000


def to_seconds(ts_sec: int, ts_nsec: int) -> float:
    """Canonical float timestamp used throughout the pipeline."""
    return (ts_sec * SECOND_NS + ts_nsec) / 1e9


@dataclass(slots=True)
class PacketRecord:
    """One captured frame: integer timestamp plus raw octets."""

    ts_sec: int
    ts_nsec: int
    orig_len: int
    frame: bytes

    @property
    def cap_len(self) -> int:
        return len(self.frame)

    @property
    def time(self) -> float:
        return to_seconds(self.ts_sec, self.ts_nsec)


@dataclass(slots=True)
class TcpSegment:
    """Decoded TCP packet; the raw input unit for flow assembly."""

    timestamp: float
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    seq: int
    ack: int
    flags: int
    window_raw: int
    payload_len: int
    window_scale_option: int | None = None
    mss_option: int | None = None

    def has(self, flag: int) -> bool:
        return bool(self.flags & flag)


@dataclass
class CaptureFile:
    """Fully materialised capture: records plus header metadata."""

    records: list[PacketRecord]
    link_type: int = LINKTYPE_ETHERNET
    resolution: str = "micro"  # "micro" or "nano"
    snaplen: int = 262144


@dataclass
class DecodeCounters:
    """Per-file accounting for decode_segment outcomes."""

    total: int = 0
    tcp: int = 0
    skipped: int = 0          # non-IPv4/TCP frames (ARP, IPv6, UDP, ...)
    malformed: int = 0
    fragments_dropped: int = 0
    snap_truncated: int = 0   # records with cap_len < orig_len

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "tcp": self.tcp,
            "skipped": self.skipped,
            "malformed": self.malformed,
            "fragments_dropped": self.fragments_dropped,
            "snap_truncated": self.snap_truncated,
        }


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    buf = stream.read(n)
    return buf if buf is not None else b""


def open_capture(stream: BinaryIO) -> tuple[int, str, bool, int]:
    """Parse the 24-octet global header.

    Returns (link_type, resolution, swapped, snaplen); `swapped` means header
    fields are in the opposite byte order from the magic's canonical form.
    """
    head = _read_exact(stream, 24)
    if len(head) < 4:
        raise TruncatedHeader("capture shorter than a magic number")
    (magic_le,) = struct.unpack_from("<I", head)
    (magic_be,) = struct.unpack_from(">I", head)
    if magic_le == MAGIC_MICRO or magic_le == MAGIC_NANO:
        swapped = False
        resolution = "micro" if magic_le == MAGIC_MICRO else "nano"
    elif magic_be == MAGIC_MICRO or magic_be == MAGIC_NANO:
        swapped = True
        resolution = "micro" if magic_be == MAGIC_MICRO else "nano"
    else:
        raise UnknownMagic(f"not a capture file (magic {head[:4].hex()})")
    if len(head) < 24:
        raise TruncatedHeader(f"global header has {len(head)} of 24 octets")
    order = ">" if swapped else "<"
    _, _, _, _, snaplen, network = struct.unpack(order + "HHiIII", head[4:])
    return network, resolution, swapped, snaplen


def iter_records(
    stream: BinaryIO, resolution: str, swapped: bool
) -> Iterator[PacketRecord]:
    """Yield records after the global header; raises on truncation."""
    rec_hdr = _REC_HDR_BE if swapped else _REC_HDR_LE
    frac_scale = 1000 if resolution == "micro" else 1
    offset = 24
    while True:
        head = _read_exact(stream, 16)
        if not head:
            return
        if len(head) < 16:
            raise TruncatedRecord("record header cut short", offset)
        ts_sec, ts_frac, cap_len, orig_len = rec_hdr.unpack(head)
        frame = _read_exact(stream, cap_len)
        if len(frame) < cap_len:
            raise TruncatedRecord(
                f"record promises {cap_len} octets, {len(frame)} remain", offset
            )
        yield PacketRecord(ts_sec, ts_frac * frac_scale, orig_len, frame)
        offset += 16 + cap_len


def read_capture(stream: BinaryIO) -> CaptureFile:
    """Read an entire classic capture file into memory."""
    link_type, resolution, swapped, snaplen = open_capture(stream)
    records = list(iter_records(stream, resolution, swapped))
    return CaptureFile(records, link_type, resolution, snaplen)


def write_capture(
    stream: BinaryIO,
    records: Iterable[PacketRecord],
    link_type: int = LINKTYPE_ETHERNET,
    resolution: str = "micro",
    snaplen: int = 262144,
) -> int:
    """Write records in classic format; returns the record count.

    Nanosecond timestamps are truncated to the chosen resolution, so callers
    wanting exact round-trips must pass timestamps representable at it.
    """
    magic = MAGIC_MICRO if resolution == "micro" else MAGIC_NANO
    stream.write(_GLOBAL_HDR.pack(magic, 2, 4, 0, 0, snaplen, link_type))
    frac_scale = 1000 if resolution == "micro" else 1
    count = 0
    for rec in records:
        stream.write(
            _REC_HDR_LE.pack(
                rec.ts_sec, rec.ts_nsec // frac_scale, len(rec.frame), rec.orig_len
            )
        )
        stream.write(rec.frame)
        count += 1
    return count


def write_capture_file(path, records, link_type=LINKTYPE_ETHERNET,
                       resolution="micro", snaplen=262144) -> int:
    import os
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        count = write_capture(fh, records, link_type, resolution, snaplen)
    os.replace(tmp, path)
    return count


def _ipv4(addr: bytes) -> str:
    return f"{addr[0]}.{addr[1]}.{addr[2]}.{addr[3]}"


def decode_segment(record: PacketRecord, link_type: int) -> TcpSegment | None:
    """Decode one Ethernet/IPv4/TCP frame.

    Returns None for frames that are not initial-fragment IPv4 TCP (callers
    skip them); raises MalformedFrame when header lengths disagree with the
    captured bytes.  One level of 802.1Q VLAN tagging is unwrapped.
    """
    if link_type != LINKTYPE_ETHERNET:
        raise MalformedFrame(f"unsupported link type {link_type}")
    frame = record.frame
    if len(frame) < 14:
        raise MalformedFrame("frame shorter than an Ethernet header")
    ethertype = (frame[12] << 8) | frame[13]
    off = 14
    if ethertype == ETHERTYPE_VLAN:
        if len(frame) < 18:
            raise MalformedFrame("VLAN tag cut short")
        ethertype = (frame[16] << 8) | frame[17]
        off = 18
    if ethertype != ETHERTYPE_IPV4:
        return None

    if len(frame) < off + 20:
        raise MalformedFrame("IPv4 header cut short")
    ver_ihl = frame[off]
    if ver_ihl >> 4 != 4:
        return None
    ihl = (ver_ihl & 0x0F) * 4
    if ihl < 20 or len(frame) < off + ihl:
        raise MalformedFrame("IPv4 header length exceeds captured bytes")
    total_len, = struct.unpack_from(">H", frame, off + 2)
    flags_frag, = struct.unpack_from(">H", frame, off + 6)
    frag_offset = flags_frag & 0x1FFF
    proto = frame[off + 9]
    if proto != 6:
        return None
    if frag_offset != 0:
        # non-initial fragment: no TCP header to decode
        return None
    if total_len < ihl or off + total_len > len(frame):
        raise MalformedFrame("IPv4 total length inconsistent with capture")
    src_ip = _ipv4(frame[off + 12 : off + 16])
    dst_ip = _ipv4(frame[off + 16 : off + 20])

    tcp_off = off + ihl
    if total_len - ihl < 20:
        raise MalformedFrame("TCP header cut short")
    src_port, dst_port, seq, ack = struct.unpack_from(">HHII", frame, tcp_off)
    doff_flags, window = struct.unpack_from(">HH", frame, tcp_off + 12)
    data_offset = (doff_flags >> 12) * 4
    flags = doff_flags & 0x3F
    if data_offset < 20 or total_len - ihl < data_offset:
        raise MalformedFrame("TCP data offset inconsistent with IP length")
    payload_len = total_len - ihl - data_offset

    window_scale = None
    mss = None
    if flags & SYN and data_offset > 20:
        window_scale, mss = _parse_syn_options(
            frame, tcp_off + 20, tcp_off + data_offset
        )

    return TcpSegment(
        timestamp=record.time,
        src_ip=src_ip,
        dst_ip=dst_ip,
        src_port=src_port,
        dst_port=dst_port,
        seq=seq,
        ack=ack,
        flags=flags,
        window_raw=window,
        payload_len=payload_len,
        window_scale_option=window_scale,
        mss_option=mss,
    )


def _parse_syn_options(frame: bytes, start: int, end: int):
    """Scan the TCP options block of a SYN for window scale and MSS."""
    window_scale = None
    mss = None
    i = start
    end = min(end, len(frame))
    while i < end:
        kind = frame[i]
        if kind == 0:  # end of options
            break
        if kind == 1:  # NOP
            i += 1
            continue
        if i + 1 >= end:
            break
        length = frame[i + 1]
        if length < 2 or i + length > end:
            break
        if kind == 2 and length == 4:
            mss = (frame[i + 2] << 8) | frame[i + 3]
        elif kind == 3 and length == 3:
            shift = frame[i + 2]
            window_scale = min(shift, 14)
        i += length
    return window_scale, mss


def iter_tcp_segments(
    stream: BinaryIO, counters: DecodeCounters | None = None
) -> Iterator[TcpSegment]:
    """Stream TCP segments out of a capture, tallying skip reasons.

    Decoding never aborts the file: malformed frames and non-TCP frames
    are counted and skipped.
    """
    link_type, resolution, swapped, _ = open_capture(stream)
    if link_type != LINKTYPE_ETHERNET:
        raise MalformedFrame(
            f"link type {link_type} not supported (need Ethernet = 1)"
        )
    if counters is None:
        counters = DecodeCounters()
    for record in iter_records(stream, resolution, swapped):
        counters.total += 1
        if record.cap_len < record.orig_len:
            counters.snap_truncated += 1
        try:
            seg = decode_segment(record, link_type)
        except MalformedFrame:
            counters.malformed += 1
            continue
        if seg is None:
            if _is_fragment(record):
                counters.fragments_dropped += 1
            else:
                counters.skipped += 1
            continue
        counters.tcp += 1
        yield seg


def _is_fragment(record: PacketRecord) -> bool:
    frame = record.frame
    if len(frame) < 22:
        return False
    ethertype = (frame[12] << 8) | frame[13]
    off = 18 if ethertype == ETHERTYPE_VLAN else 14
    if len(frame) < off + 20:
        return False
    ethertype = (frame[16] << 8) | frame[17] if off == 18 else ethertype
    if ethertype != ETHERTYPE_IPV4 or frame[off] >> 4 != 4:
        return False
    if frame[off + 9] != 6:
        return False
    flags_frag, = struct.unpack_from(">H", frame, off + 6)
    return (flags_frag & 0x1FFF) != 0
