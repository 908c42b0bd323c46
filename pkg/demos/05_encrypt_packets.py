"""Encrypt an update packet with Blowfish before it leaves the cluster head."""

import os

from groupmove.cipher import KeySchedule, decrypt_packet, encrypt_block, encrypt_packet
from groupmove.codec import compress_batch
from groupmove.mining import group_model
from groupmove.world import ScenarioConfig, SensorGrid, simulate_group

# published reference vector: all-zero key and block
zero = KeySchedule.from_hex("0000000000000000")
print(f"E(0, 0) = {encrypt_block(zero, 0):016X}  (reference 4EF997456198DD78)")

grid = SensorGrid()
full = simulate_group(ScenarioConfig(group_size=4, gdr=0.5, seed=1), grid, n_intervals=250)
model = group_model([s.window(0, 150) for s in full], range(grid.size))
batch = [s.window(150, 250) for s in full]
packet = compress_batch(batch, grid, model).streams[0].packets[0]

ks = KeySchedule.from_key(os.urandom(16))
for mode in ("ecb", "cbc"):
    sealed = encrypt_packet(ks, packet, mode=mode)
    assert decrypt_packet(ks, sealed, mode=mode) == packet.data
    print(f"{mode}: {packet.size}-byte packet -> {len(sealed)} encrypted bytes")
