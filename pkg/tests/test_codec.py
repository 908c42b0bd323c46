import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupmove.codec import (
    BitReader,
    BitWriter,
    EncodingError,
    FormatError,
    HuffmanTable,
    ModelMismatch,
    PacketConfig,
    SegmentRecord,
    compress_batch,
    compression_ratio,
    decompress_batch,
    huffman_code_lengths,
    huffman_decode,
    huffman_encode,
    online_volume,
    pack_batch,
    packet_size,
    raw_volume,
    read_container,
    unpack_batch,
    write_container,
)
from groupmove.merge import DELIM, HIT
from groupmove.mining import learn_pst
from groupmove.replace import shannon_entropy
from groupmove.world import LocationSequence, ScenarioConfig, SensorGrid, symbol_distance
from oracles import scenario_batch

GRID = SensorGrid()


# -- Huffman -------------------------------------------------------------


def test_single_symbol_gets_one_bit():
    table, bits = huffman_encode([4, 4, 4, 4])
    assert bits == "0000" and table.lengths == {4: 1}


def test_two_symbol_stream():
    table, bits = huffman_encode([0, 0, 1])
    assert table.lengths == {0: 1, 1: 1}
    assert len(bits) == 3


def test_empty_inputs():
    with pytest.raises(ValueError):
        huffman_encode([])
    table, _ = huffman_encode([1, 2])
    assert huffman_decode(table, "") == []


def test_dangling_bits():
    table, bits = huffman_encode([0, 1, 2, 2, 2])
    with pytest.raises(FormatError):
        huffman_decode(table, bits + "1")


def test_canonical_order_and_ties():
    # equal weights: ties merge the smaller ids first, codes ordered by (length, symbol)
    lengths = huffman_code_lengths({3: 1, 1: 1, 2: 1})
    table = HuffmanTable(lengths)
    assert lengths == {1: 2, 2: 2, 3: 1}
    assert table.codes == {3: "0", 1: "10", 2: "11"}


def test_reserved_tokens_are_codeable():
    seq = [5, DELIM, 5, 6, DELIM, HIT, HIT]
    table, bits = huffman_encode(seq)
    assert huffman_decode(table, bits) == seq
    assert HuffmanTable.from_bytes(table.to_bytes()) == table


def test_table_format_errors():
    with pytest.raises(FormatError):
        HuffmanTable.from_bytes(b"\x00")
    with pytest.raises(FormatError):
        HuffmanTable.from_bytes(b"\x00\x02\x00\x01\x01")
    with pytest.raises(ValueError):
        HuffmanTable({0: 1, 1: 1, 2: 1})


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(-2, 12), min_size=1, max_size=200))
def test_huffman_roundtrip_and_bounds(seq):
    table, bits = huffman_encode(seq)
    assert huffman_decode(table, bits) == seq
    codes = list(table.codes.values())
    assert not any(a != b and b.startswith(a) for a in codes for b in codes)
    if len(set(seq)) > 1:
        h = shannon_entropy(seq)
        assert h - 1e-12 <= len(bits) / len(seq) < h + 1
        assert table.kraft_sum() == pytest.approx(1.0)


def test_lower_entropy_same_multiset_size():
    # codeword total depends only on the count multiset
    a = [0] * 5 + [1] * 3 + [2] * 2
    b = [7] * 5 + [8] * 3 + [9] * 2
    assert len(huffman_encode(a)[1]) == len(huffman_encode(b)[1])


# -- bit I/O and packing -------------------------------------------------


def test_bit_writer_reader():
    w = BitWriter()
    w.write(5, 3)
    w.write(0, 0)
    w.write(200, 8)
    data = w.getvalue()
    assert len(data) == 2
    r = BitReader(data)
    assert r.read(3) == 5 and r.read(8) == 200 and r.remaining() == 5
    with pytest.raises(FormatError):
        r.read(6)
    with pytest.raises(EncodingError):
        w.write(8, 3)


def test_default_field_widths():
    cfg = PacketConfig()
    assert (cfg.id_bits, cfg.location_bits, cfg.timestamp_bits, cfg.header_bytes) == (8, 8, 8, 4)
    assert cfg.update_bytes == 7


@pytest.mark.parametrize("D", [1, 4, 50, 200])
def test_single_segment_packet_size(D):
    cfg = PacketConfig()
    body = "01" * D
    rec = SegmentRecord("S", 0, D, 3, (3,), body)
    packet = pack_batch([rec], cfg, b"abcd")
    expected = cfg.header_bytes + math.ceil(
        (cfg.count_bits + 1 + cfg.timestamp_bits + cfg.length_bits + cfg.id_bits + len(body)) / 8
    )
    assert packet.size == expected == packet_size([rec], cfg)
    assert packet.data[:4] == b"abcd"


def test_field_overflow():
    cfg = PacketConfig()
    with pytest.raises(EncodingError):
        pack_batch([SegmentRecord("S", 256, 1, 0, (0,), "0")], cfg, b"abcd")
    with pytest.raises(EncodingError):
        pack_batch([SegmentRecord("S", 0, 1, 300, (300,), "0")], cfg, b"abcd")
    with pytest.raises(EncodingError):
        pack_batch([], cfg, b"abc")


@settings(max_examples=50, deadline=None)
@given(
    st.integers(2, 10), st.integers(2, 10), st.integers(2, 10),
    st.lists(st.tuples(st.booleans(), st.integers(0, 1023), st.integers(0, 1023), st.integers(0, 1023)),
             min_size=1, max_size=6),
)
def test_field_layout_roundtrip(a, l, c, fields):
    cfg = PacketConfig(timestamp_bits=a, length_bits=l, id_bits=c)
    fits = [(g, t % (1 << a), n % (1 << l), i % (1 << c)) for g, t, n, i in fields]
    recs = [SegmentRecord("G" if g else "S", t, n, i, (), "", "1" if g else "") for g, t, n, i in fits]
    r = BitReader(pack_batch(recs, cfg, b"\0" * 4).data[4:])
    assert r.read(cfg.count_bits) == len(recs)
    for g, t, n, i in fits:
        assert r.read(1) == int(g)
        assert (r.read(a), r.read(l), r.read(c)) == (t, n, i)
        if g:
            assert r.read(1) == 1


# -- online accounting and ratio -----------------------------------------


def seq(symbols):
    return LocationSequence(0, tuple(range(len(symbols))), tuple(symbols))


def test_online_volume_examples():
    assert online_volume([seq([1, 2, 3, 4])]) == 28
    perfect = learn_pst([1] * 30, alphabet=range(4))
    s = seq([1, 1, 2, 1])
    # only the interval at which the object jumps to 2 is mispredicted
    assert online_volume([s], predictor=perfect) == 7
    assert online_volume([s], predictor=perfect) <= online_volume([s])


def test_raw_volume():
    assert raw_volume([seq([1, 2, 3, 4]), seq([5, 5])]) == 6 * 3


def test_ratio_examples():
    assert compression_ratio(10, 10) == 1.0
    assert compression_ratio(100, 25) == 4.0
    with pytest.raises(ValueError):
        compression_ratio(1, 0)


# -- whole batch ---------------------------------------------------------


@pytest.mark.parametrize("n,gdr,seed", [(1, 0, 0), (4, 0, 1), (4, 1, 2), (8, 0.5, 3), (16, 2, 4)])
def test_exact_roundtrip(n, gdr, seed):
    batch, model = scenario_batch(ScenarioConfig(group_size=n, gdr=gdr, seed=seed, batch_period=60), GRID)
    groups = {s.object_id: 0 for s in batch}
    result = compress_batch(batch, GRID, model, groups, eps=0)
    assert decompress_batch(result, GRID, model, groups) == batch


@pytest.mark.parametrize("eps", [1, 2])
def test_bounded_roundtrip(eps):
    batch, model = scenario_batch(ScenarioConfig(group_size=6, gdr=1.5, seed=9, batch_period=80), GRID)
    groups = {s.object_id: 0 for s in batch}
    out = decompress_batch(compress_batch(batch, GRID, model, groups, eps=eps), GRID, model, groups)
    assert [s.timestamps for s in out] == [s.timestamps for s in batch]
    worst = max(symbol_distance(GRID, a, b) for o, r in zip(out, batch) for a, b in zip(o.symbols, r.symbols))
    assert worst <= eps


def test_empty_payload():
    model = learn_pst([0, 1], alphabet=range(GRID.size))
    assert decompress_batch([], GRID, model, {}) == []


def test_digest_mismatch():
    batch, model = scenario_batch(ScenarioConfig(group_size=3, seed=1, batch_period=30), GRID)
    groups = {s.object_id: 0 for s in batch}
    result = compress_batch(batch, GRID, model, groups)
    other = learn_pst(batch[0].symbols[::-1], alphabet=range(GRID.size))
    stream = result.streams[0]
    with pytest.raises(ModelMismatch):
        unpack_batch(stream.packets[0], stream.table, other, GRID, groups)


def test_truncated_packet():
    batch, model = scenario_batch(ScenarioConfig(group_size=3, gdr=1, seed=1, batch_period=30), GRID)
    groups = {s.object_id: 0 for s in batch}
    stream = compress_batch(batch, GRID, model, groups).streams[0]
    with pytest.raises(FormatError):
        unpack_batch(stream.packets[0].data[:-3], stream.table, model, GRID, groups)


def test_replace_never_lengthens_stream():
    for seed in range(5):
        batch, model = scenario_batch(ScenarioConfig(group_size=4, gdr=0.5, seed=seed, batch_period=100), GRID)
        groups = {s.object_id: 0 for s in batch}
        with_r = compress_batch(batch, GRID, model, groups)
        without = compress_batch(batch, GRID, model, groups, use_replace=False)
        assert with_r.stream_bits <= without.stream_bits


def test_many_segments_split_packets():
    # 300 walkers in one cluster with distinct groups: more segments than one count field holds
    cfg = PacketConfig(id_bits=9)
    seqs = [LocationSequence(i, (0, 1), (0, 1)) for i in range(300)]
    groups = {i: i for i in range(300)}
    model = learn_pst([0, 1] * 5, alphabet=range(GRID.size))
    result = compress_batch(seqs, GRID, model, groups, config=cfg)
    assert result.n_packets == 2
    assert decompress_batch(result, GRID, model, groups, config=cfg) == seqs


def test_container_roundtrip():
    batch, model = scenario_batch(ScenarioConfig(group_size=5, gdr=1, seed=6, batch_period=50), GRID)
    groups = {s.object_id: 0 for s in batch}
    result = compress_batch(batch, GRID, model, groups)
    start, pairs = read_container(write_container(result))
    assert start == result.batch_start
    assert decompress_batch(pairs, GRID, model, groups, batch_start=start) == batch
    with pytest.raises(FormatError):
        read_container(b"XXXX")
