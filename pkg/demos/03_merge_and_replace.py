"""Shrink one group's data in two steps: merge columns, then replace hits.

Merging folds each time column of the group into a single symbol when the
members agree (or, with an error bound, when one node is close enough to all
of them).  Replacement then swaps correctly predicted symbols for a shared
HIT token whenever doing so lowers the entropy of the stream.
"""

from groupmove.merge import DELIM, HIT, merge_group, unmerge
from groupmove.mining import group_model
from groupmove.replace import hir_bruteforce, replace, replace_all, restore, shannon_entropy
from groupmove.world import ScenarioConfig, SensorGrid, simulate_group

grid = SensorGrid()
config = ScenarioConfig(group_size=4, gdr=0.1, seed=0)
full = simulate_group(config, grid, n_intervals=300)
history = [s.window(0, 200) for s in full]
batch = [s.window(200, 240) for s in full]
columns = list(zip(*(s.symbols for s in batch)))


def show(tokens):
    names = {DELIM: "|", HIT: "*"}
    return " ".join(names.get(t, str(t)) for t in tokens)


for eps in (0, 1):
    merged = merge_group(columns, eps, grid)
    print(f"eps={eps}: {len(columns) * len(columns[0])} items -> {len(merged)} tokens")
    print("  ", show(merged.tokens[:30]), "...")
    if eps == 0:
        assert unmerge(merged) == columns

merged = merge_group(columns, 0, grid)
model = group_model(history, range(grid.size))
spans = [(len(merged), merged.group_size)]
inter = replace(merged.tokens, model, spans)
print("\nentropy trace:", " -> ".join(f"{h:.3f}" for h in inter.entropy_trace))
for rule, symbols in inter.steps:
    print(f"  {rule} rule on {symbols}")
print("replace everything predictable:", f"{shannon_entropy(replace_all(merged.tokens, model, spans)):.3f}")
print("after replace:", show(inter.items[:30]), "...")
assert restore(inter, model) == list(merged.tokens)

# the rules reach the same entropy as enumerating every replacement choice
window = merge_group(columns[:16], 0, grid)
wspans = [(len(window), window.group_size)]
print(f"\nfirst 16 columns: replace {shannon_entropy(replace(window.tokens, model, wspans).items):.4f}"
      f" vs brute force {hir_bruteforce(window.tokens, model, wspans, limit=32):.4f}")
