"""Pack one batch period into update packets and unpack it at the sink.

The cluster head segments the batch, merges and replaces each segment, and
Huffman-codes the result into bit-exact packets that carry a 4-byte prefix of
the predictor's digest.  The sink holds the same predictor and reverses
every step.
"""

from groupmove.codec import (
    ModelMismatch,
    compress_batch,
    compression_ratio,
    decompress_batch,
    online_volume,
    raw_volume,
    unpack_batch,
)
from groupmove.mining import group_model, learn_pst
from groupmove.world import ScenarioConfig, SensorGrid, simulate_group, symbol_distance

grid = SensorGrid()
config = ScenarioConfig(group_size=4, gdr=0.1, batch_period=100, seed=0)
full = simulate_group(config, grid, n_intervals=300)
history = [s.window(0, 200) for s in full]
batch = [s.window(200, 300) for s in full]
groups = {s.object_id: 0 for s in batch}
model = group_model(history, range(grid.size))

raw = raw_volume(batch)
print(f"raw location data:        {raw:6d} bytes")
print(f"online, one packet each:  {online_volume(batch):6d} bytes")
print(f"online, with prediction:  {online_volume(batch, predictor=model):6d} bytes")

for eps in (0, 1):
    packed = compress_batch(batch, grid, model, groups, eps=eps)
    plain = compress_batch(batch, grid, model, groups, eps=eps, use_replace=False)
    out = decompress_batch(packed, grid, model, groups)
    worst = max(symbol_distance(grid, a, b) for o, r in zip(out, batch) for a, b in zip(o.symbols, r.symbols))
    print(f"batch eps={eps}: {packed.packet_bytes} bytes in {packed.n_packets} packet(s) "
          f"(+{packed.table_bytes} table bytes), ratio {compression_ratio(raw, packed.packet_bytes):.2f}, "
          f"worst error {worst} hop(s)")
    print(f"  coded stream {packed.stream_bits} bits with replacement, {plain.stream_bits} bits Huffman alone")

packed = compress_batch(batch, grid, model, groups)
stream = packed.streams[0]
try:
    unpack_batch(stream.packets[0], stream.table, learn_pst([0, 1, 2], range(grid.size)), grid, groups)
except ModelMismatch as exc:
    print("a sink with the wrong predictor refuses the packet:", exc)
