"""Low-rate application-layer DoS flow detection toolkit.

Reads and writes classic pcap captures, reassembles TCP connections,
extracts per-connection features, synthesizes labeled traffic, and
trains small from-scratch classifiers over the result."""

__version__ = "0.1.0"
