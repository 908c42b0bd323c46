"""Discover which objects move together.

Four objects travel as a tight group and four more wander independently.
Each object gets a pattern tree; trees that predict alike are joined in a
similarity graph, split into highly connected clusters, and the clusterings
from three time windows are reconciled into one consensus grouping.
"""

from groupmove.mining import build_similarity_graph, learn_pst, mine_groups, simp_score
from groupmove.world import ScenarioConfig, SensorGrid, random_walk, simulate_group

grid = SensorGrid()
group = simulate_group(ScenarioConfig(group_size=4, gdr=0, seed=3), grid, n_intervals=300)
walkers = [random_walk(grid, 300, seed=40 + i, object_id=4 + i) for i in range(4)]
objects = group + walkers

trees = {s.object_id: learn_pst(s, range(grid.size)) for s in objects}
print("similarity scores (higher = more alike):")
for a, b in [(0, 1), (0, 4), (4, 5)]:
    print(f"  simp({a},{b}) = {simp_score(trees[a], trees[b]):6.2f}")

graph = build_similarity_graph(trees, threshold=2.0)
print("similarity graph edges:", sorted(graph.edges))

result = mine_groups(objects, grid, regions=3)
for local in result.local_results:
    print(f"  window {local.source}: {local.groups()}")
print("consensus grouping:", result.grouping.groups())
gid = result.grouping.partition[0]
print(f"group {gid} predictor: {len(result.models[gid])} contexts, digest {result.models[gid].digest().hex()[:16]}")
