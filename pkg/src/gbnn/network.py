"""Clustered binary network: topology, message storage, and serialization.

A network partitions n = C * L neurons into C clusters of L neurons each.
Neuron (c, l) lives at flat index c * L + l.  Messages are stored by wiring
their symbols into a clique: one neuron per cluster, every inter-cluster
pair connected.  Edges are binary and the matrix carries no intra-cluster
entries; self-excitation belongs to the dynamics, not the structure.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "NetworkConfig",
    "Network",
    "NetworkFormatError",
    "generate_messages",
    "erase",
    "serialize",
    "deserialize",
    "save_network",
    "load_network",
    "save_messages",
    "load_messages",
    "parse_probe",
    "probe_text",
]

Probe = tuple  # entries are int (known symbol) or None (erased)

_MAGIC = b"GBNN"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBIId")  # magic, version, C, L, gamma
_MAX_NEURONS = 1 << 20  # refuse absurd dimensions before allocating n*n


class NetworkFormatError(ValueError):
    """Raised when serialized network bytes are malformed."""


@dataclass(frozen=True)
class NetworkConfig:
    """Shape and dynamics parameters of a network.

    Attributes:
        cluster_count: number of clusters C (>= 2).
        neurons_per_cluster: neurons per cluster L (>= 1).
        gamma: self-excitation strength used by the dynamics (>= 0).
    """

    cluster_count: int
    neurons_per_cluster: int
    gamma: float = 1.0

    def __post_init__(self):
        if self.cluster_count < 2:
            raise ValueError(f"cluster_count must be >= 2, got {self.cluster_count}")
        if self.neurons_per_cluster < 1:
            raise ValueError(
                f"neurons_per_cluster must be >= 1, got {self.neurons_per_cluster}"
            )
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        if self.cluster_count * self.neurons_per_cluster > _MAX_NEURONS:
            raise ValueError(
                f"network of {self.cluster_count * self.neurons_per_cluster} neurons "
                f"exceeds the supported maximum of {_MAX_NEURONS}"
            )

    @property
    def neuron_count(self) -> int:
        return self.cluster_count * self.neurons_per_cluster

    def flat_index(self, cluster: int, neuron: int) -> int:
        return cluster * self.neurons_per_cluster + neuron

    def cluster_of(self, flat: int) -> int:
        return flat // self.neurons_per_cluster

    def cluster_slice(self, cluster: int) -> slice:
        start = cluster * self.neurons_per_cluster
        return slice(start, start + self.neurons_per_cluster)

    def validate_message(self, message) -> np.ndarray:
        msg = np.asarray(message)
        if msg.shape != (self.cluster_count,):
            raise ValueError(
                f"message must have {self.cluster_count} symbols, got shape {msg.shape}"
            )
        if msg.min() < 0 or msg.max() >= self.neurons_per_cluster:
            raise ValueError(
                f"message symbols must lie in [0, {self.neurons_per_cluster})"
            )
        return msg.astype(np.int64)

    def validate_probe(self, probe) -> Probe:
        if len(probe) != self.cluster_count:
            raise ValueError(
                f"probe must have {self.cluster_count} entries, got {len(probe)}"
            )
        for entry in probe:
            if entry is None:
                continue
            if not 0 <= int(entry) <= self.neurons_per_cluster - 1:
                raise ValueError(
                    f"probe symbol {entry} out of range [0, {self.neurons_per_cluster})"
                )
        return tuple(None if e is None else int(e) for e in probe)


class Network:
    """A weight matrix plus its configuration.

    The matrix is mutable while messages are being stored and is treated as
    read-only afterwards; retrievals may then share it across threads.
    """

    def __init__(self, config: NetworkConfig):
        self.config = config
        n = config.neuron_count
        self.w = np.zeros((n, n), dtype=np.uint8)
        self._packed: np.ndarray | None = None
        self._degrees: np.ndarray | None = None

    def store(self, message) -> None:
        """Wire one message in as a clique over its symbol neurons."""
        msg = self.config.validate_message(message)
        L = self.config.neurons_per_cluster
        idx = np.arange(self.config.cluster_count) * L + msg
        self.w[np.ix_(idx, idx)] = 1
        self.w[idx, idx] = 0
        self._packed = None
        self._degrees = None

    def store_many(self, messages) -> None:
        """Store a batch of messages (rows of a (count, C) array)."""
        msgs = np.atleast_2d(np.asarray(messages, dtype=np.int64))
        if msgs.size == 0:
            return
        C = self.config.cluster_count
        L = self.config.neurons_per_cluster
        if msgs.shape[1] != C:
            raise ValueError(f"messages must have {C} columns, got {msgs.shape[1]}")
        if msgs.min() < 0 or msgs.max() >= L:
            raise ValueError(f"message symbols must lie in [0, {L})")
        flat = msgs + np.arange(C, dtype=np.int64) * L
        for a in range(C):
            for b in range(a + 1, C):
                self.w[flat[:, a], flat[:, b]] = 1
                self.w[flat[:, b], flat[:, a]] = 1
        self._packed = None
        self._degrees = None

    def edge_count(self) -> int:
        return int(self.w.sum()) // 2

    def degrees(self) -> np.ndarray:
        """Per-neuron edge counts; cached between stores."""
        if self._degrees is None:
            self._degrees = self.w.sum(axis=1, dtype=np.int64)
        return self._degrees

    def packed_rows(self) -> np.ndarray:
        """Adjacency rows packed into uint64 words, bit i of word j = neuron 64*j+i."""
        if self._packed is None:
            n = self.config.neuron_count
            n_words = (n + 63) // 64
            bits = np.packbits(self.w, axis=1, bitorder="little")
            padded = np.zeros((n, n_words * 8), dtype=np.uint8)
            padded[:, : bits.shape[1]] = bits
            self._packed = padded.view(np.uint64)
        return self._packed


def generate_messages(config: NetworkConfig, count: int, seed: int) -> np.ndarray:
    """Draw `count` uniform random messages, reproducibly from `seed`."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    rng = np.random.default_rng(seed)
    return rng.integers(
        0,
        config.neurons_per_cluster,
        size=(count, config.cluster_count),
        dtype=np.int64,
    )


def erase(message, clusters) -> Probe:
    """Blank the listed cluster positions, leaving the rest known."""
    msg = list(message)
    for c in clusters:
        if not 0 <= c < len(msg):
            raise ValueError(f"cluster index {c} out of range for {len(msg)} clusters")
    victim = set(clusters)
    return tuple(None if c in victim else int(msg[c]) for c in range(len(msg)))


def serialize(network: Network) -> bytes:
    """Encode a network as header + bit-packed upper triangle.

    Layout: magic "GBNN", version u8, C and L as little-endian u32, gamma as
    little-endian f64, then the strict upper triangle of the matrix packed
    row-major (most significant bit first), zero-padded to a byte boundary.
    """
    cfg = network.config
    header = _HEADER.pack(
        _MAGIC, _FORMAT_VERSION, cfg.cluster_count, cfg.neurons_per_cluster, cfg.gamma
    )
    n = cfg.neuron_count
    triu = network.w[np.triu_indices(n, k=1)]
    return header + np.packbits(triu).tobytes()


def deserialize(data: bytes) -> Network:
    """Decode `serialize` output; raises NetworkFormatError on malformed bytes."""
    if len(data) < _HEADER.size:
        raise NetworkFormatError("truncated header")
    magic, version, C, L, gamma = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise NetworkFormatError(f"bad magic bytes {magic!r}")
    if version != _FORMAT_VERSION:
        raise NetworkFormatError(f"unsupported format version {version}")
    if C < 2 or L < 1:
        raise NetworkFormatError(f"invalid dimensions C={C}, L={L}")
    if C * L > _MAX_NEURONS:
        raise NetworkFormatError(f"dimension overflow: C*L = {C * L}")
    if not math.isfinite(gamma) or gamma < 0:
        raise NetworkFormatError(f"invalid gamma {gamma}")
    n = C * L
    bit_count = n * (n - 1) // 2
    payload = data[_HEADER.size :]
    expected = (bit_count + 7) // 8
    if len(payload) != expected:
        raise NetworkFormatError(
            f"payload of {len(payload)} bytes, expected {expected}"
        )
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=bit_count)
    network = Network(NetworkConfig(C, L, gamma))
    iu = np.triu_indices(n, k=1)
    network.w[iu] = bits
    network.w[(iu[1], iu[0])] = bits
    same_cluster = (iu[0] // L) == (iu[1] // L)
    if bits[same_cluster].any():
        raise NetworkFormatError("payload sets an intra-cluster edge")
    return network


def save_network(network: Network, path) -> None:
    Path(path).write_bytes(serialize(network))


def load_network(path) -> Network:
    return deserialize(Path(path).read_bytes())


def save_messages(path, messages) -> None:
    """One message per line, comma-separated decimal symbols."""
    msgs = np.atleast_2d(np.asarray(messages, dtype=np.int64))
    lines = [",".join(str(s) for s in row) for row in msgs]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_messages(path, config: NetworkConfig | None = None) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([int(f) for f in line.split(",")])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        return np.zeros((0, config.cluster_count if config else 0), dtype=np.int64)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: messages have inconsistent symbol counts")
    msgs = np.asarray(rows, dtype=np.int64)
    if config is not None:
        for row in msgs:
            config.validate_message(row)
    return msgs


def parse_probe(text: str) -> Probe:
    """Parse "9,?,?,10" into (9, None, None, 10)."""
    entries = []
    for field in text.strip().split(","):
        field = field.strip()
        if field == "?":
            entries.append(None)
        else:
            entries.append(int(field))
    return tuple(entries)


def probe_text(probe) -> str:
    return ",".join("?" if e is None else str(e) for e in probe)
