import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asdimlab.errors import InputError, ResourceCapError, UnsupportedBackendError
from asdimlab.groups import (
    FiniteTableGroup,
    RacgEngine,
    build_ball,
    cyclic_table,
    enumerate_words_brute,
)

from conftest import CYCLE5, PATH3


def test_table_group_identity_norms_and_distance():
    table, names = cyclic_table(4)
    g = FiniteTableGroup(table, names=names)
    assert g.identity == 0
    assert g.diameter == 1  # all non-identity elements generate
    assert g.distance(1, 3) == 1
    assert g.norm(0) == 0


def test_table_group_custom_generators():
    table, names = cyclic_table(5)
    g = FiniteTableGroup(table, names=names, generators=[1, 4])
    assert g.norm(2) == 2
    assert g.diameter == 2


def test_table_group_rejects_non_symmetric_generators():
    table, names = cyclic_table(5)
    with pytest.raises(InputError):
        FiniteTableGroup(table, names=names, generators=[1])


def test_table_group_rejects_non_group_table():
    with pytest.raises(InputError):
        FiniteTableGroup([[0, 1], [0, 1]])


def test_racg_normal_form_examples(path3_engine):
    eng = path3_engine
    assert eng.normal_form([]) == ()
    assert eng.normal_form([1, 1]) == ()  # s s = e
    assert eng.word_str(eng.normal_form(eng.parse_word("a b a"))) == "b"
    assert eng.word_str(eng.normal_form(eng.parse_word("a c a"))) == "a.c.a"


def test_racg_rejects_non_right_angled():
    with pytest.raises(UnsupportedBackendError):
        RacgEngine([[1, 3], [3, 1]])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 4), max_size=14))
def test_racg_normal_form_idempotent_on_cycle5(word):
    eng = RacgEngine(CYCLE5)
    nf = eng.normal_form(word)
    assert eng.normal_form(nf) == nf


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 2), max_size=12))
def test_racg_norm_symmetry(word):
    eng = RacgEngine(PATH3)
    x = eng.normal_form(word)
    assert eng.norm(x) == eng.norm(eng.inverse(x))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 4), max_size=10), st.lists(st.integers(0, 4), max_size=10))
def test_racg_multiplication_consistent_with_concatenation(w1, w2):
    eng = RacgEngine(CYCLE5)
    assert eng.multiply(eng.normal_form(w1), eng.normal_form(w2)) == eng.normal_form(
        list(w1) + list(w2)
    )


def test_ball_radius_zero():
    eng = RacgEngine(PATH3)
    ball = build_ball(eng, 0)
    assert len(ball) == 1 and ball.elements[0] == ()


def test_dinf_ball_radius_three():
    eng = RacgEngine([[1, 0], [0, 1]], names=["a", "b"])
    ball = build_ball(eng, 3)
    words = sorted(eng.word_str(x) for x in ball.elements)
    assert words == ["a", "a.b", "a.b.a", "b", "b.a", "b.a.b", "e"]


def test_cycle5_ball_count_matches_brute_enumeration():
    eng = RacgEngine(CYCLE5)
    for radius in (1, 2, 3):
        ball = build_ball(eng, radius)
        assert len(ball) == len(enumerate_words_brute(eng, radius))
    assert len(build_ball(eng, 2)) == 21  # 1 + 5 + (20 ordered pairs - 5 merged)


def test_bfs_layers_equal_norms():
    eng = RacgEngine(CYCLE5)
    ball = build_ball(eng, 5)
    for i, x in enumerate(ball.elements):
        assert ball.norms[i] == eng.norm(x)


def test_ball_cap_error_reports_cap():
    eng = RacgEngine(CYCLE5)
    with pytest.raises(ResourceCapError) as err:
        build_ball(eng, 6, cap=100)
    assert err.value.cap == 100


def test_distance_normal_form_vs_bfs_cross_oracle():
    eng = RacgEngine(CYCLE5)
    ball = build_ball(eng, 8)
    metric = ball.graph_metric()
    rng = np.random.default_rng(5)
    core = [i for i in range(len(ball)) if ball.norms[i] <= 4]
    for _ in range(120):
        i, j = rng.choice(core, size=2)
        alg = eng.distance(ball.elements[i], ball.elements[j])
        assert metric.dist(int(i), int(j)) == alg


def test_parabolic_balls_embed_isometrically():
    eng = RacgEngine(CYCLE5)
    big = build_ball(eng, 6)
    letters_sets = [[0], [0, 1], [0, 2], [0, 1, 2], [1, 3, 4]]
    for letters in letters_sets:
        sub, mapping = eng.sub_engine(letters)
        sub_ball = build_ball(sub, 6)
        # the parabolic ball, re-encoded into ambient letters
        images = {
            tuple(mapping[g] for g in x): sub.norm(x) for x in sub_ball.elements
        }
        ambient = {
            x: int(big.norms[i])
            for i, x in enumerate(big.elements)
            if set(x) <= set(letters)
        }
        assert images == ambient


def test_ball_json_shape(path3_engine):
    ball = build_ball(path3_engine, 2)
    payload = ball.to_json()
    assert payload["radius"] == 2
    assert payload["elements"][0] == {"id": 0, "word": "e", "norm": 0}
    assert all(len(e) == 3 for e in payload["edges"])
