"""Huffman coding, batch packet layout, and transmitted-volume accounting.

Packet layout (most significant bit first)::

    header          4 bytes    first bytes of the predictor digest
    segment count   8 bits
    per segment:
      kind          1 bit      1 = G-segment, 0 = S-segment
      begin         a bits     timestamp relative to the batch start
      length        l bits     number of tracking intervals (columns)
      id            c bits     object id (S) or group id (G)
      members       k bits     G only: presence mask over the k sorted group members
      body                     Huffman codewords of the segment's tokens

The Huffman table of a packet travels out of band (``stream-only``
accounting); :meth:`HuffmanTable.to_bytes` gives its size when it is sent.
"""

from __future__ import annotations

import heapq
import math
import struct
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .merge import DELIM, HIT, MergedSequence, merge_group, unmerge
from .replace import Predictor, predictable_items, replace, restore
from .world import LocationSequence, SensorGrid, Segment, desegment, segment_and_align


class FormatError(ValueError):
    """Malformed bit stream or packet."""


class EncodingError(ValueError):
    """A value does not fit its packet field."""


class ModelMismatch(FormatError):
    """Packet was produced with a different predictor."""


# --------------------------------------------------------------------------
# Huffman


@dataclass(frozen=True)
class HuffmanTable:
    """Canonical Huffman code, defined entirely by its code lengths."""

    lengths: dict[int, int]
    codes: dict[int, str] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        codes, code, prev = {}, 0, 0
        for sym in sorted(self.lengths, key=lambda s: (self.lengths[s], s)):
            length = self.lengths[sym]
            if length < 1:
                raise ValueError("code lengths must be >= 1")
            code <<= length - prev
            if code >= 1 << length:
                raise ValueError("code lengths violate the Kraft inequality")
            codes[sym] = format(code, f"0{length}b")
            code += 1
            prev = length
        object.__setattr__(self, "codes", codes)

    def kraft_sum(self) -> float:
        return sum(2.0 ** -n for n in self.lengths.values())

    def decoder(self) -> dict[str, int]:
        return {c: s for s, c in self.codes.items()}

    def to_bytes(self) -> bytes:
        out = [struct.pack(">H", len(self.lengths))]
        for sym in sorted(self.lengths):
            out.append(struct.pack(">hB", sym, self.lengths[sym]))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "HuffmanTable":
        if len(data) < 2:
            raise FormatError("truncated Huffman table")
        (count,) = struct.unpack_from(">H", data)
        if len(data) != 2 + 3 * count:
            raise FormatError("Huffman table length mismatch")
        lengths = {}
        for i in range(count):
            sym, length = struct.unpack_from(">hB", data, 2 + 3 * i)
            lengths[sym] = length
        return cls(lengths)


def huffman_code_lengths(freqs: Mapping[int, int]) -> dict[int, int]:
    """Optimal code lengths; frequency ties merge the smaller symbol ids first."""
    if not freqs:
        raise ValueError("no symbols to code")
    symbols = sorted(freqs)
    if len(symbols) == 1:
        return {symbols[0]: 1}
    heap = [(freqs[s], i, (s,)) for i, s in enumerate(symbols)]
    heapq.heapify(heap)
    depth = dict.fromkeys(symbols, 0)
    order = len(symbols)
    while len(heap) > 1:
        f1, _, a = heapq.heappop(heap)
        f2, _, b = heapq.heappop(heap)
        for s in a + b:
            depth[s] += 1
        heapq.heappush(heap, (f1 + f2, order, a + b))
        order += 1
    return depth


def huffman_encode(seq: Sequence[int]) -> tuple[HuffmanTable, str]:
    if len(seq) == 0:
        raise ValueError("cannot Huffman-code an empty sequence")
    table = HuffmanTable(huffman_code_lengths(Counter(seq)))
    return table, "".join(table.codes[s] for s in seq)


def huffman_decode(table: HuffmanTable, bits: str) -> list[int]:
    decoder = table.decoder()
    out, cur = [], ""
    for b in bits:
        cur += b
        sym = decoder.get(cur)
        if sym is not None:
            out.append(sym)
            cur = ""
    if cur:
        raise FormatError(f"{len(cur)} dangling bits at end of stream")
    return out


# --------------------------------------------------------------------------
# Bit I/O


class BitWriter:
    def __init__(self):
        self._bits: list[str] = []

    def write(self, value: int, width: int, name: str = "field") -> None:
        if width == 0:
            if value:
                raise EncodingError(f"{name}={value} does not fit in 0 bits")
            return
        if not 0 <= value < 1 << width:
            raise EncodingError(f"{name}={value} does not fit in {width} bits")
        self._bits.append(format(value, f"0{width}b"))

    def write_bits(self, bits: str) -> None:
        self._bits.append(bits)

    def __len__(self):
        return sum(len(b) for b in self._bits)

    def getvalue(self) -> bytes:
        bits = "".join(self._bits)
        bits += "0" * (-len(bits) % 8)
        return int(bits, 2).to_bytes(len(bits) // 8, "big") if bits else b""


class BitReader:
    def __init__(self, data: bytes):
        self._bits = "".join(format(byte, "08b") for byte in data)
        self.pos = 0

    def read(self, width: int) -> int:
        if width == 0:
            return 0
        if self.pos + width > len(self._bits):
            raise FormatError("packet truncated")
        value = int(self._bits[self.pos:self.pos + width], 2)
        self.pos += width
        return value

    def read_symbol(self, decoder: Mapping[str, int], max_len: int) -> int:
        start = self.pos
        for end in range(start + 1, min(start + max_len, len(self._bits)) + 1):
            sym = decoder.get(self._bits[start:end])
            if sym is not None:
                self.pos = end
                return sym
        raise FormatError(f"no codeword at bit {start}")

    def remaining(self) -> int:
        return len(self._bits) - self.pos


# --------------------------------------------------------------------------
# Packets


@dataclass(frozen=True)
class PacketConfig:
    """Field widths in bits, plus the per-packet header size in bytes."""

    timestamp_bits: int = 8
    location_bits: int = 8
    id_bits: int = 8
    length_bits: int = 8
    count_bits: int = 8
    header_bytes: int = 4

    @property
    def update_bytes(self) -> int:
        """Size of one online location update packet."""
        return self.header_bytes + sum(
            math.ceil(b / 8) for b in (self.timestamp_bits, self.location_bits, self.id_bits)
        )

    @property
    def max_segments(self) -> int:
        return (1 << self.count_bits) - 1


@dataclass(frozen=True)
class SegmentRecord:
    """One packed segment: field values plus its coded body."""

    kind: str
    begin: int
    length: int
    ident: int
    members: tuple[int, ...]
    body: str
    mask: str = ""


@dataclass(frozen=True)
class UpdatePacket:
    header: bytes
    segments: tuple[SegmentRecord, ...]
    data: bytes

    @property
    def size(self) -> int:
        return len(self.data)


def pack_batch(records: Sequence[SegmentRecord], config: PacketConfig, header: bytes) -> UpdatePacket:
    if len(header) != config.header_bytes:
        raise EncodingError(f"header must be {config.header_bytes} bytes")
    w = BitWriter()
    w.write(len(records), config.count_bits, "segment count")
    for rec in records:
        w.write(1 if rec.kind == "G" else 0, 1)
        w.write(rec.begin, config.timestamp_bits, "timestamp")
        w.write(rec.length, config.length_bits, "length")
        w.write(rec.ident, config.id_bits, "id")
        if rec.kind == "G":
            w.write_bits(rec.mask)
        w.write_bits(rec.body)
    return UpdatePacket(header, tuple(records), header + w.getvalue())


def packet_size(records: Sequence[SegmentRecord], config: PacketConfig) -> int:
    """Bytes :func:`pack_batch` would produce, without building the packet."""
    bits = config.count_bits
    for rec in records:
        bits += 1 + config.timestamp_bits + config.length_bits + config.id_bits + len(rec.mask) + len(rec.body)
    return config.header_bytes + math.ceil(bits / 8)


def _group_members(groups: Mapping[int, int]) -> dict[int, list[int]]:
    members: dict[int, list[int]] = defaultdict(list)
    for obj in sorted(groups):
        members[groups[obj]].append(obj)
    return members


def _segment_tokens(seg: Segment, eps: int, grid: SensorGrid) -> tuple[list[int], int]:
    if seg.kind == "S":
        return list(seg.rows[0]), 1
    merged = merge_group(seg.columns(), eps, grid)
    return list(merged.tokens), merged.group_size


@dataclass
class ClusterStream:
    """Everything the cluster head sends for one batch."""

    cluster: int
    packets: list[UpdatePacket]
    table: HuffmanTable
    tokens: list[int]
    spans: list[tuple[int, int]]
    stream_bits: int
    predictable: int

    @property
    def packet_bytes(self) -> int:
        return sum(p.size for p in self.packets)

    @property
    def table_bytes(self) -> int:
        return len(self.table.to_bytes())


def encode_segments(
    segments: Sequence[Segment],
    predictor: Predictor,
    grid: SensorGrid,
    groups: Mapping[int, int],
    eps: int = 0,
    config: PacketConfig = PacketConfig(),
    batch_start: int = 0,
    use_replace: bool = True,
    digest: bytes | None = None,
) -> ClusterStream:
    """Merge, replace, Huffman-code and pack the segments of one cluster head."""
    if not segments:
        raise ValueError("no segments to encode")
    members = _group_members(groups)
    tokens: list[int] = []
    spans: list[tuple[int, int]] = []
    for seg in segments:
        toks, n = _segment_tokens(seg, eps, grid)
        tokens.extend(toks)
        spans.append((len(toks), n))
    n_predictable = len(predictable_items(tokens, predictor, spans))
    coded = list(replace(tokens, predictor, spans).items) if use_replace else tokens
    table, stream = huffman_encode(coded)

    records, pos = [], 0
    for seg, (size, _) in zip(segments, spans):
        body = "".join(table.codes[t] for t in coded[pos:pos + size])
        pos += size
        if seg.kind == "G":
            roster = members[seg.group]
            present = set(seg.members)
            mask = "".join("1" if m in present else "0" for m in roster)
            ident = seg.group
        else:
            mask, ident = "", seg.members[0]
        records.append(SegmentRecord(seg.kind, seg.begin - batch_start, seg.length, ident, seg.members, body, mask))

    if digest is None:
        digest = predictor.digest() if hasattr(predictor, "digest") else bytes(32)
    header = digest[: config.header_bytes]
    packets = [
        pack_batch(records[i:i + config.max_segments], config, header)
        for i in range(0, len(records), config.max_segments)
    ]
    return ClusterStream(segments[0].cluster, packets, table, coded, spans, len(stream), n_predictable)


def unpack_batch(
    packet: UpdatePacket | bytes,
    table: HuffmanTable,
    predictor: Predictor,
    grid: SensorGrid,
    groups: Mapping[int, int],
    config: PacketConfig = PacketConfig(),
    batch_start: int = 0,
    digest: bytes | None = None,
) -> list[Segment]:
    """Parse one packet and undo replace and merge; returns the decoded segments."""
    data = packet.data if isinstance(packet, UpdatePacket) else bytes(packet)
    if len(data) < config.header_bytes:
        raise FormatError("packet shorter than its header")
    if digest is None:
        digest = predictor.digest() if hasattr(predictor, "digest") else bytes(32)
    if data[: config.header_bytes] != digest[: config.header_bytes]:
        raise ModelMismatch("packet was encoded with a different predictor")
    members = _group_members(groups)
    decoder = table.decoder()
    max_len = max(table.lengths.values())
    r = BitReader(data[config.header_bytes:])

    heads, tokens, spans = [], [], []
    for _ in range(r.read(config.count_bits)):
        is_group = r.read(1) == 1
        begin = r.read(config.timestamp_bits) + batch_start
        length = r.read(config.length_bits)
        ident = r.read(config.id_bits)
        if is_group:
            roster = members.get(ident)
            if roster is None:
                raise FormatError(f"unknown group id {ident}")
            present = tuple(m for m in roster if r.read(1))
            if len(present) < 2:
                raise FormatError("G-segment with fewer than two members")
        else:
            present = (ident,)
        n = len(present)
        body: list[int] = []
        columns, verbatim, chunk = 0, False, 0
        while columns < length or verbatim:
            tok = r.read_symbol(decoder, max_len)
            body.append(tok)
            if tok == DELIM:
                verbatim, chunk = not verbatim, 0
            elif verbatim:
                chunk += 1
                if chunk == n:
                    columns, chunk = columns + 1, 0
            else:
                columns += 1
        if columns != length:
            raise FormatError("segment body overruns its length field")
        heads.append((is_group, begin, present))
        tokens.extend(body)
        spans.append((len(body), n))
    if r.remaining() >= 8:
        raise FormatError("trailing bytes after the last segment")

    restored = restore(tokens, predictor, spans)
    segments, pos = [], 0
    for (is_group, begin, present), (size, n) in zip(heads, spans):
        body = restored[pos:pos + size]
        pos += size
        if is_group:
            rows = tuple(zip(*unmerge(MergedSequence(n, tuple(body)))))
            segments.append(Segment("G", begin, present, rows, grid.cluster_of(rows[0][0]), groups[present[0]]))
        else:
            if DELIM in body or HIT in body:
                raise FormatError("reserved token inside an S-segment")
            segments.append(
                Segment("S", begin, present, (tuple(body),), grid.cluster_of(body[0]), groups.get(present[0], 0))
            )
    return segments


# --------------------------------------------------------------------------
# Whole-batch pipeline and accounting


@dataclass
class BatchResult:
    streams: list[ClusterStream]
    segments: list[Segment]
    batch_start: int

    @property
    def packet_bytes(self) -> int:
        return sum(s.packet_bytes for s in self.streams)

    @property
    def table_bytes(self) -> int:
        return sum(s.table_bytes for s in self.streams)

    @property
    def stream_bits(self) -> int:
        return sum(s.stream_bits for s in self.streams)

    @property
    def n_packets(self) -> int:
        return sum(len(s.packets) for s in self.streams)


def compress_batch(
    seqs: Sequence[LocationSequence],
    grid: SensorGrid,
    predictor: Predictor,
    groups: Mapping[int, int] | None = None,
    eps: int = 0,
    config: PacketConfig = PacketConfig(),
    use_replace: bool = True,
) -> BatchResult:
    """Segment one batch per cluster head and encode each cluster's segments."""
    groups = {s.object_id: 0 for s in seqs} if groups is None else dict(groups)
    segments = segment_and_align(seqs, grid, groups)
    batch_start = min((s.timestamps[0] for s in seqs if len(s)), default=0)
    by_cluster: dict[int, list[Segment]] = defaultdict(list)
    for seg in segments:
        by_cluster[seg.cluster].append(seg)
    streams = [
        encode_segments(by_cluster[c], predictor, grid, groups, eps, config, batch_start, use_replace)
        for c in sorted(by_cluster)
    ]
    return BatchResult(streams, segments, batch_start)


def decompress_batch(
    result: BatchResult | Sequence[tuple[bytes, HuffmanTable]],
    grid: SensorGrid,
    predictor: Predictor,
    groups: Mapping[int, int],
    config: PacketConfig = PacketConfig(),
    batch_start: int | None = None,
) -> list[LocationSequence]:
    if isinstance(result, BatchResult):
        batch_start = result.batch_start if batch_start is None else batch_start
        pairs = [(p.data, s.table) for s in result.streams for p in s.packets]
    else:
        pairs = list(result)
    segments = []
    for data, table in pairs:
        segments.extend(unpack_batch(data, table, predictor, grid, groups, config, batch_start or 0))
    return desegment(segments)


def online_volume(
    seqs: Sequence[LocationSequence],
    config: PacketConfig = PacketConfig(),
    predictor: Predictor | None = None,
) -> int:
    """Bytes sent when every tracking interval triggers its own update packet.

    With a predictor, an update is suppressed whenever the shared predictor,
    given the object's previous locations, guesses the new one correctly.
    """
    sent = 0
    for seq in seqs:
        if predictor is None:
            sent += len(seq)
            continue
        sent += len(seq) - prediction_hits(seq.symbols, predictor)
    return sent * config.update_bytes


def prediction_hits(symbols: Sequence[int], predictor: Predictor) -> int:
    return sum(1 for i, s in enumerate(symbols) if predictor.argmax(symbols[:i]) == s)


def raw_volume(seqs: Sequence[LocationSequence], config: PacketConfig = PacketConfig()) -> int:
    """Uncompressed location data: timestamp, location and id per item, no headers."""
    per_item = config.timestamp_bits + config.location_bits + config.id_bits
    return math.ceil(sum(len(s) for s in seqs) * per_item / 8)


def compression_ratio(raw_bytes: float, compressed_bytes: float) -> float:
    if compressed_bytes <= 0:
        raise ValueError("compressed size must be positive")
    return raw_bytes / compressed_bytes


# --------------------------------------------------------------------------
# Container file used by the command line tools

_MAGIC = b"GMPB"


def write_container(result: BatchResult) -> bytes:
    out = [_MAGIC, struct.pack(">IH", result.batch_start, result.n_packets)]
    for stream in result.streams:
        table = stream.table.to_bytes()
        for p in stream.packets:
            out.append(struct.pack(">I", len(table)) + table)
            out.append(struct.pack(">I", len(p.data)) + p.data)
    return b"".join(out)


def read_container(data: bytes) -> tuple[int, list[tuple[bytes, HuffmanTable]]]:
    if data[:4] != _MAGIC:
        raise FormatError("not a batch container")
    batch_start, count = struct.unpack_from(">IH", data, 4)
    pos, pairs = 10, []
    for _ in range(count):
        (tlen,) = struct.unpack_from(">I", data, pos)
        table = HuffmanTable.from_bytes(data[pos + 4:pos + 4 + tlen])
        pos += 4 + tlen
        (plen,) = struct.unpack_from(">I", data, pos)
        pairs.append((data[pos + 4:pos + 4 + plen], table))
        pos += 4 + plen
    if pos != len(data):
        raise FormatError("trailing bytes in container")
    return batch_start, pairs
