import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundext.staged import StagedSet, StageTableError, load_stage_table, member_at


def test_member_at_examples():
    S = StagedSet(n_max=4, s_max=9, entries={0: 2})
    assert not member_at(S, 0, 1)
    assert member_at(S, 0, 2)
    assert not member_at(StagedSet(n_max=5, s_max=200, entries={}), 5, 100)


def test_member_at_out_of_range():
    with pytest.raises(StageTableError):
        member_at(StagedSet(n_max=2, s_max=3), 3, 0)


def test_load_examples():
    S = load_stage_table('{"n_max":4,"s_max":9,"entries":[[0,2],[2,5]]}')
    assert S.entries == {0: 2, 2: 5}
    with pytest.raises(StageTableError, match="duplicate"):
        load_stage_table('{"n_max":4,"s_max":9,"entries":[[0,2],[0,3]]}')
    with pytest.raises(StageTableError, match="stage"):
        load_stage_table('{"n_max":4,"s_max":9,"entries":[[1,99]]}')


@pytest.mark.parametrize(
    "text",
    ["not json", '{"n_max": 4}', '{"n_max":4,"s_max":9,"entries":[[1]]}', '{"n_max":"4","s_max":9,"entries":[]}'],
)
def test_load_malformed(text):
    with pytest.raises(StageTableError):
        load_stage_table(text)


def test_roundtrip_order_insensitive(tmp_path):
    doc = {"entries": [[3, 1], [0, 7]], "s_max": 7, "n_max": 3}
    path = tmp_path / "t.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    S = load_stage_table(path)
    assert load_stage_table(S.dumps()) == S


tables = st.integers(0, 8).flatmap(
    lambda n_max: st.integers(0, 15).flatmap(
        lambda s_max: st.builds(
            lambda e: StagedSet(n_max, s_max, e),
            st.dictionaries(st.integers(0, n_max), st.integers(0, s_max)),
        )
    )
)


@given(tables, st.data())
def test_monotone_and_horizon(S, data):
    n = data.draw(st.integers(0, S.n_max))
    s = data.draw(st.integers(0, S.s_max))
    if S.member_at(n, s):
        assert all(S.member_at(n, t) for t in range(s, S.s_max + 3))
    assert S.member_at(n, S.s_max) == (n in S.entries)
