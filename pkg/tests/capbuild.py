"""Hand-rolled frame and capture builders for tests.

Deliberately independent of the package's own writer: frames and pcap
bytes are packed inline so reader bugs cannot cancel out writer bugs."""

from __future__ import annotations

import struct

FIN = 0x01
SYN = 0x02
RST = 0x04
PSH = 0x08
ACK = 0x10
URG = 0x20


def ip_bytes(dotted: str) -> bytes:
    return bytes(int(p) for p in dotted.split("."))


def tcp_frame(
    src_ip: str,
    dst_ip: str,
    src_port: int,
    dst_port: int,
    seq: int,
    ack: int = 0,
    flags: int = ACK,
    window: int = 8192,
    payload: bytes = b"",
    wscale: int | None = None,
    mss: int | None = None,
    src_mac: bytes = b"\x02\x00\x00\x00\x00\x01",
    dst_mac: bytes = b"\x02\x00\x00\x00\x00\x02",
    vlan: int | None = None,
    ttl: int = 64,
) -> bytes:
    options = b""
    if mss is not None:
        options += struct.pack(">BBH", 2, 4, mss)
    if wscale is not None:
        options += struct.pack(">BBB", 3, 3, wscale)
    while len(options) % 4:
        options += b"\x01"  # NOP pad
    data_offset = 5 + len(options) // 4
    tcp = struct.pack(
        ">HHIIBBHHH",
        src_port,
        dst_port,
        seq & 0xFFFFFFFF,
        ack & 0xFFFFFFFF,
        data_offset << 4,
        flags,
        window,
        0,
        0,
    ) + options + payload
    total_len = 20 + len(tcp)
    ip = struct.pack(
        ">BBHHHBBH4s4s",
        0x45,
        0,
        total_len,
        0,
        0x4000,  # DF, no fragment offset
        ttl,
        6,
        0,
        ip_bytes(src_ip),
        ip_bytes(dst_ip),
    ) + tcp
    if vlan is None:
        ether = dst_mac + src_mac + struct.pack(">H", 0x0800)
    else:
        ether = (
            dst_mac
            + src_mac
            + struct.pack(">HH", 0x8100, vlan)
            + struct.pack(">H", 0x0800)
        )
    return ether + ip


def pcap_bytes(
    frames: list[tuple[float, bytes]],
    magic: int = 0xA1B2C3D4,
    byteorder: str = "little",
    link_type: int = 1,
    snaplen: int = 65535,
) -> bytes:
    """Classic capture serialized by hand; timestamps given in seconds."""
    endian = "<" if byteorder == "little" else ">"
    out = struct.pack(
        endian + "IHHiIII", magic, 2, 4, 0, 0, snaplen, link_type
    )
    nano = magic in (0xA1B23C4D, 0x4D3CB2A1)
    for t, frame in frames:
        frac = round(t * (1e9 if nano else 1e6))
        sec, sub = divmod(int(frac), 1_000_000_000 if nano else 1_000_000)
        out += struct.pack(
            endian + "IIII", sec, sub, len(frame), len(frame)
        ) + frame
    return out


def capture_file(path, frames, **kwargs) -> None:
    with open(path, "wb") as fh:
        fh.write(pcap_bytes(frames, **kwargs))
