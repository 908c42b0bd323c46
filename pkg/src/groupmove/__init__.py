"""Group movement pattern mining and batch compression of tracking data."""

from .world import Location, LocationSequence, ScenarioConfig, Segment, SensorGrid, hop_distance, simulate_group
from .mining import PatternTree, learn_pst, mine_groups
from .merge import DELIM, HIT, MergedSequence, merge_group, unmerge
from .replace import replace, restore, shannon_entropy
from .codec import PacketConfig, compress_batch, decompress_batch, huffman_decode, huffman_encode

__version__ = "0.1.0"
