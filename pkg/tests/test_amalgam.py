import numpy as np
import pytest

from asdimlab.amalgam import (
    SIDE_A,
    SIDE_B,
    SIDE_BASE,
    amalgam_normal_form,
    check_assertion_2_1,
    check_assertion_2_2,
    check_separation,
    check_translate_disjointness,
    compute_D_R,
    dual_graph_dot,
    partition_ball,
    partition_json,
    prepare,
    project_pi,
    verify_partition,
    TableAmalgam,
)
from asdimlab.errors import InputError, OutOfBallError, PreconditionError

from conftest import z_n_group


@pytest.fixture(scope="module")
def dinf_ball(dinf_amalgam):
    return prepare(dinf_amalgam, 8)


def test_degenerate_amalgam_rejected():
    z2 = z_n_group(2, "a")
    with pytest.raises(InputError):
        TableAmalgam(z2, z2, [0, 1], [0, 1])


def test_embeddings_must_agree():
    z4 = z_n_group(4, "x")
    with pytest.raises(InputError):
        TableAmalgam(z4, z4, [0, 2], [0, 1])


def test_table_amalgam_norm_formula(dinf_amalgam):
    eng = dinf_amalgam.engine
    e = eng.identity
    a = eng.mul_gen(e, 0)
    ab = eng.mul_gen(a, 1)
    assert eng.norm(e) == 0
    assert eng.norm(a) == 1
    assert eng.norm(ab) == 2
    aba = eng.mul_gen(ab, 0)
    assert eng.word_str(aba) == "A.a.B.b.A.a"
    assert eng.distance(e, aba) == 3
    assert eng.norm(eng.inverse(aba)) == 3


def test_normal_form_identity_and_ab(dinf_ball, dinf_amalgam):
    eng = dinf_amalgam.engine
    nf = amalgam_normal_form(dinf_ball, eng.identity)
    assert nf.length == 0 and eng.norm(nf.c_part) == 0
    ab = eng.mul_gen(eng.mul_gen(eng.identity, 0), 1)
    nf = amalgam_normal_form(dinf_ball, ab)
    assert [eng.word_str(z) for z in nf.letters] == ["A.a", "B.b"]
    assert nf.length == 2
    assert nf.sides == [SIDE_A, SIDE_B]


def test_presentation_length_equals_dual_graph_level(z4z2z4_amalgam):
    ab = prepare(z4z2z4_amalgam, 6)
    eng = z4z2z4_amalgam.engine
    for i, x in enumerate(ab.ball.elements):
        vid = project_pi(ab, x)
        assert eng.level(x) == int(ab.dual.level[vid])
        nf = amalgam_normal_form(ab, x)
        assert nf.length == eng.level(x)
        # reassembly
        prod = eng.identity
        for z in nf.letters:
            prod = eng.multiply(prod, z)
        prod = eng.multiply(prod, nf.c_part)
        assert prod == x


def test_pi_constant_on_cosets(z4z2z4_amalgam):
    ab = prepare(z4z2z4_amalgam, 6)
    eng = z4z2z4_amalgam.engine
    x = eng.mul_gen(eng.identity, 0)
    c = z4z2z4_amalgam.from_c(1)  # the nontrivial C element
    assert project_pi(ab, x) == project_pi(ab, eng.multiply(x, c))


def test_assertion_2_1_all_fixtures(dinf_amalgam, z2z3_amalgam, z4z2z4_amalgam, path3_amalgam):
    for ctx in (dinf_amalgam, z2z3_amalgam, z4z2z4_amalgam, path3_amalgam):
        ab = prepare(ctx, 8)
        verdict = check_assertion_2_1(ab)
        assert verdict.passed, verdict.line()
        assert verdict.checked > 0


def test_assertion_2_2_default_and_random_sections(
    dinf_amalgam, z2z3_amalgam, z4z2z4_amalgam, path3_amalgam
):
    for ctx in (dinf_amalgam, z2z3_amalgam, z4z2z4_amalgam, path3_amalgam):
        ab = prepare(ctx, 8)
        assert check_assertion_2_2(ab).passed
        assert check_assertion_2_2(ab, sections=ctx.random_sections(20240810)).passed


def test_assertion_2_2_example_value(dinf_ball, dinf_amalgam):
    # gamma = aba: tail z_k c = A.a, d(a, C) = 1 <= 3 = |gamma|
    eng = dinf_amalgam.engine
    aba = eng.normal_form([0, 1, 0])
    nf = amalgam_normal_form(dinf_ball, aba)
    tail = eng.multiply(nf.letters[-1], nf.c_part)
    assert dinf_amalgam.dist_to_c(tail) == 1
    assert eng.norm(aba) == 3


def test_compute_D_R_requires_positive_R(dinf_ball):
    with pytest.raises(PreconditionError):
        compute_D_R(dinf_ball, dinf_ball.dual.base(), 0, side=SIDE_A)


def test_compute_D_R_dinf_example(dinf_amalgam):
    ab = prepare(dinf_amalgam, 8, core_radius=5)
    eng = dinf_amalgam.engine
    ids = compute_D_R(ab, ab.dual.base(), 2, side=SIDE_A)
    assert [eng.word_str(ab.ball.elements[i]) for i in ids] == ["A.a.B.b"]


def test_compute_D_R_projects_into_B_R(z2z3_amalgam):
    ab = prepare(z2z3_amalgam, 9, core_radius=6)
    dual = ab.dual
    levels = ab.element_level()
    for lvl in (2, 4):
        for u in dual.vertices_at_level(lvl, side=SIDE_A)[:3]:
            ids = compute_D_R(ab, u, 2)
            assert len(ids) > 0
            # pi(D_R^u) within B_R^u: levels between |u| and |u| + R
            assert all(lvl <= levels[i] <= lvl + 2 for i in ids)


def test_compute_D_R_out_of_ball(dinf_amalgam):
    ab = prepare(dinf_amalgam, 6, core_radius=6)
    with pytest.raises(OutOfBallError):
        compute_D_R(ab, ab.dual.base(), 2, side=SIDE_A)


def test_separation_preconditions(dinf_ball):
    dual = dinf_ball.dual
    base = dual.base()
    close = dual.vertices_at_level(2, side=SIDE_A)[0]
    with pytest.raises(PreconditionError):
        check_separation(dinf_ball, base, close, 2)  # |u'| - |u| = 2 <= R


def test_separation_dinf_and_racg(dinf_amalgam, path3_amalgam):
    for ctx in (dinf_amalgam, path3_amalgam):
        ab = prepare(ctx, 8, core_radius=5)
        dual = ab.dual
        u_prime = dual.vertices_at_level(4, side=SIDE_A)[0]
        verdict = check_separation(ab, dual.base(), u_prime, 2)
        assert verdict.passed, verdict.line()


def test_separation_fails_on_corrupted_boundary(dinf_amalgam):
    # fault injection: removing a point from D_R must break the separation,
    # and the checker reports the leaking witness
    ab = prepare(dinf_amalgam, 8, core_radius=5)
    dual = ab.dual
    u_prime = dual.vertices_at_level(4, side=SIDE_A)[0]
    d_set = compute_D_R(ab, dual.base(), 2, side=SIDE_A)
    verdict = check_separation(
        ab, dual.base(), u_prime, 2, boundary_override=d_set[:-1]
    )
    assert not verdict.passed
    assert verdict.witness is not None
    assert "path avoiding" in verdict.note


def test_translate_disjointness_bounds(dinf_amalgam, z2z3_amalgam, z4z2z4_amalgam):
    for ctx in (dinf_amalgam, z2z3_amalgam, z4z2z4_amalgam):
        for r in (4, 8):
            big_r = r // 4
            ab = prepare(ctx, 3 * r, core_radius=3 * r - 3 * big_r)
            verdict = check_translate_disjointness(ab, r, big_r)
            assert verdict.passed, (ctx.name, r, verdict.line())


def test_translate_disjointness_precondition(dinf_ball):
    with pytest.raises(PreconditionError):
        check_translate_disjointness(dinf_ball, 4, 2)  # R > r/4


def test_partition_dinf_covers_and_overlaps_in_boundary(dinf_amalgam):
    ab = prepare(dinf_amalgam, 24, core_radius=20)
    part = partition_ball(ab, 8, 1, SIDE_A)
    verdict = verify_partition(ab, part)
    assert verdict.passed, verdict.line()
    assert len(part.pieces) >= 2
    payload = partition_json(ab, part)
    assert payload["r"] == 8 and payload["side"] == "A"


def test_partition_needs_room(dinf_ball):
    with pytest.raises(PreconditionError):
        partition_ball(dinf_ball, 8, 2, SIDE_A)  # r <= 4R


def test_partition_small_ball_keeps_central_piece(dinf_amalgam):
    # no level-r gates inside the ball: only the base slab and N_R(C) remain
    ab = prepare(dinf_amalgam, 6, core_radius=4)
    part = partition_ball(ab, 12, 1, SIDE_A)
    assert len(part.central) > 0
    assert [int(ab.dual.level[u]) for u, _ in part.pieces] == [0]
    assert verify_partition(ab, part).passed


def test_partition_racg(path3_amalgam):
    ab = prepare(path3_amalgam, 14, core_radius=11)
    part = partition_ball(ab, 6, 1, SIDE_B)
    assert verify_partition(ab, part).passed


def test_partition_pieces_two_levels_apart_are_r_separated(dinf_amalgam):
    ab = prepare(dinf_amalgam, 28, core_radius=25)
    r = 8
    part = partition_ball(ab, r, 1, SIDE_A)
    by_level = {}
    for u, ids in part.pieces:
        by_level.setdefault(int(ab.dual.level[u]) // r, []).append(ids)
    levels = sorted(by_level)
    assert len(levels) >= 3
    for n1 in levels:
        for n2 in levels:
            if abs(n1 - n2) >= 2:
                a = sorted(int(i) for ids in by_level[n1] for i in ids)
                b = [int(i) for ids in by_level[n2] for i in ids]
                fld = ab.metric.dist_field(a)
                assert min(fld[i] for i in b) >= r


def test_translation_equivariance_on_samples(dinf_amalgam):
    # pi^{-1}(B_r^u) = g_u pi^{-1}(B_r^A) checked setwise for an even-level u
    ab = prepare(dinf_amalgam, 12, core_radius=8)
    eng = dinf_amalgam.engine
    dual = ab.dual
    u = dual.vertices_at_level(2, side=SIDE_A)[0]
    g_u = dual.rep_element[u]
    r = 2
    levels = ab.element_level()
    anc = dual.ancestor_at_level(dual.vertex_of_element, 2)
    lhs = {
        ab.ball.elements[i]
        for i in range(ab.n)
        if anc[i] == u and levels[i] <= 2 + r and ab.ball.norms[i] <= 6
    }
    base_region = [
        ab.ball.elements[i]
        for i in range(ab.n)
        if levels[i] <= r
        and ab.side_of_elements()[i] in (SIDE_A, SIDE_BASE)
        and ab.ball.norms[i] <= 4
    ]
    translated = {eng.multiply(g_u, x) for x in base_region}
    assert translated <= lhs


def test_dual_graph_dot_alternates_piece_labels(dinf_amalgam):
    ab = prepare(dinf_amalgam, 6)
    dot = dual_graph_dot(ab)
    assert dot.startswith("graph dual_graph {")
    assert 'label="A"' in dot and 'label="B"' in dot


def test_dinf_dual_graph_is_alternating_path(dinf_amalgam):
    # K for Dinf at radius 6: a path whose pieces alternate Delta(A)/Delta(B)
    ab = prepare(dinf_amalgam, 6)
    dual = ab.dual
    multi = [m for m in dual.piece_members if len(m) > 1]
    assert all(len(m) == 2 for m in multi)
    degree = {}
    for m in multi:
        for u in m:
            degree[u] = degree.get(u, 0) + 1
    assert max(degree.values()) <= 2  # a path
    # consecutive pieces along the path have different types Delta(A)/Delta(B)
    for u in degree:
        meeting = [
            dual.piece_side[p]
            for p, mem in enumerate(dual.piece_members)
            if u in mem and len(mem) > 1
        ]
        assert len(set(meeting)) == len(meeting)


def test_dual_graph_radius_zero_single_vertex(dinf_amalgam):
    ab = prepare(dinf_amalgam, 0)
    assert ab.dual.n_vertices == 1
    assert int(ab.dual.level[0]) == 0
