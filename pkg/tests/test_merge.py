import pytest
from hypothesis import given, settings, strategies as st

from groupmove.merge import DELIM, HIT, MergedSequence, merge_group, select_representative, unmerge
from groupmove.world import Location, SensorGrid, symbol_distance

GRID = SensorGrid()
a, b, c = 17, 18, 19


def sym(x, y):
    return GRID.symbol(Location(x, y))


def oracle_representative(column, eps):
    """Plain-python scan over every node: least total deviation within eps, smallest id."""
    best = None
    for cand in range(GRID.size):
        devs = [symbol_distance(GRID, cand, m) for m in column]
        if max(devs) <= eps and (best is None or sum(devs) < best[0]):
            best = (sum(devs), cand)
    return None if best is None else best[1]


def test_reserved_tokens_outside_alphabet():
    assert DELIM < 0 and HIT < 0 and DELIM != HIT


def test_identical_sequences_trim_to_one():
    cols = [(a, a, a), (b, b, b), (c, c, c)]
    m = merge_group(cols, 0, GRID)
    assert m.tokens == (a, b, c)
    assert len(m) == 3


def test_exact_mode_keeps_d_column_verbatim():
    m = merge_group([(a, a, a), (a, b, a)], 0, GRID)
    assert m.tokens == (a, DELIM, a, b, a, DELIM)


def test_adjacent_d_columns_share_one_run():
    m = merge_group([(a, b), (b, c), (c, c)], 0, GRID)
    assert m.tokens == (DELIM, a, b, b, c, DELIM, c)


def test_representative_small_triangle():
    col = (sym(4, 4), sym(5, 4), sym(4, 5))
    rep = select_representative(col, 1, GRID)
    assert rep == oracle_representative(col, 1) == sym(4, 4)


def test_representative_midpoint():
    assert select_representative((sym(2, 2), sym(4, 2)), 1, GRID) == sym(3, 2)


def test_representative_tie_goes_to_smallest_id():
    # (3,2) and (2,3) both sit one hop from each member
    rep = select_representative((sym(2, 2), sym(3, 3)), 1, GRID)
    assert rep == sym(3, 2) == min(sym(3, 2), sym(2, 3))


def test_representative_trivial_cases():
    assert select_representative((a, a, a), 0, GRID) == a
    assert select_representative((a, a, a), 3, GRID) == a
    assert select_representative((a, b), 0, GRID) is None
    assert select_representative((sym(0, 0), sym(5, 5)), 2, GRID) is None


def test_negative_eps_rejected():
    with pytest.raises(ValueError):
        merge_group([(a,)], -1, GRID)
    with pytest.raises(ValueError):
        select_representative((a,), -1, GRID)


def test_ragged_columns_rejected():
    with pytest.raises(ValueError):
        merge_group([(a, a), (a,)], 0, GRID)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(0, 255), min_size=1, max_size=5),
    st.integers(1, 3),
)
def test_selection_optimality(column, eps):
    assert select_representative(tuple(column), eps, GRID) == (
        column[0] if len(set(column)) == 1 else oracle_representative(column, eps)
    )


def local_columns(n, length, spread):
    """Columns clustered around a walking centre so eps can bite."""
    centre = st.tuples(st.integers(spread, 15 - spread), st.integers(spread, 15 - spread))
    offset = st.tuples(st.integers(-spread, spread), st.integers(-spread, spread))

    @st.composite
    def build(draw):
        cols = []
        for _ in range(draw(st.integers(1, length))):
            cx, cy = draw(centre)
            col = []
            for _ in range(n):
                dx, dy = draw(offset)
                col.append(sym(cx + dx, cy + dy))
            cols.append(tuple(col))
        return cols

    return build()


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: local_columns(n, 12, 1)))
def test_lossless_at_eps_zero(cols):
    m = merge_group(cols, 0, GRID)
    assert unmerge(m) == cols
    non_delim = [t for t in m.tokens if t != DELIM]
    assert len(non_delim) <= len(cols) * len(cols[0])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: local_columns(n, 12, 2)), st.integers(1, 3))
def test_error_bound(cols, eps):
    out = unmerge(merge_group(cols, eps, GRID))
    assert len(out) == len(cols)
    for got, real in zip(out, cols):
        assert all(symbol_distance(GRID, g, r) <= eps for g, r in zip(got, real))


def test_token_count_bound_and_all_verbatim_case():
    cols = [(a, b), (b, c)]
    m = merge_group(cols, 0, GRID)
    non_delim = [t for t in m.tokens if t != DELIM]
    assert len(non_delim) == 2 * len(cols)
    assert len(m.tokens) == 2 * len(cols) + 2
    assert len(merge_group([(a, a), (b, b)], 0, GRID)) < 2 * 2


@pytest.mark.parametrize("n", [1, 2, 4, 8, 16])
def test_identical_inputs_token_count_independent_of_n(n):
    path = [a, b, c, b, a]
    m = merge_group([(s,) * n for s in path], 0, GRID)
    assert len(m) == len(path)


def test_unmerge_expands_plain_token():
    assert unmerge(MergedSequence(4, (a,))) == [(a, a, a, a)]


@pytest.mark.parametrize(
    "tokens",
    [(DELIM, a, b), (a, DELIM), (DELIM, a, b, c, DELIM), (DELIM, DELIM)],
)
def test_unmerge_format_errors(tokens):
    with pytest.raises(ValueError):
        unmerge(MergedSequence(2, tokens))
