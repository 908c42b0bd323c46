"""Simulate a moving group and cut its trajectories into per-cluster segments.

Eight objects follow a leader across a 16x16 sensor grid.  Every follower
stays within one hop of the leader, so most of the time the whole group sits
inside one 4x4 cluster tile and the cluster head can align the members into a
single G-segment.
"""

from collections import Counter

from groupmove.world import ScenarioConfig, SensorGrid, desegment, segment_and_align, simulate_group

grid = SensorGrid()
config = ScenarioConfig(group_size=8, gdr=1, batch_period=100, seed=7)
seqs = simulate_group(config, grid)

leader = seqs[0]
print(f"{len(seqs)} objects, {len(leader)} tracking intervals each")
print("leader path (first 12 nodes):", [grid.location(s) for s in leader.symbols[:12]])

segments = segment_and_align(seqs, grid)
kinds = Counter(s.kind for s in segments)
print(f"{len(segments)} segments: {kinds['G']} aligned group segments, {kinds['S']} solo segments")
for seg in segments[:6]:
    print(f"  {seg.kind} cluster={seg.cluster:2d} t={seg.begin:3d}..{seg.begin + seg.length - 1:3d} members={seg.members}")

# segmentation is a partition of the input: putting the pieces back gives the input
assert desegment(segments) == seqs
print("desegment(segment_and_align(x)) == x")
