import json
import math

import numpy as np
import pytest

from asdimlab.amalgam import SIDE_A, prepare
from asdimlab.builder import (
    CoverCertificate,
    algebraic_diameter,
    certificate_json_str,
    color_gap,
    cover_amalgam,
    cover_finite_group,
    cover_product,
    cover_racg,
    cover_union_finite,
    cover_union_uniform,
    make_schedule,
    measure_certificate,
    product_region,
    verify_certificate,
)
from asdimlab.covers import Cover
from asdimlab.coxeter import CoxeterSystem
from asdimlab.errors import InputError, PreconditionError, SchedulingError
from asdimlab.groups import FiniteTableGroup, RacgEngine, cyclic_table

from conftest import CYCLE5, PATH3, PATH4, z_n_group


def test_cover_finite_group_trivial_and_z2():
    trivial = FiniteTableGroup([[0]], names=["e"])
    cert = cover_finite_group(trivial, 4)
    assert len(cert.cover.sets) == 1 and len(cert.cover.sets[0]) == 1
    z2 = z_n_group(2, "a")
    cert = cover_finite_group(z2, 10)
    assert cert.n == 0
    assert cert.claimed_d == 1.0
    assert cert.claimed_r == 10.0
    assert verify_certificate(cert).passed


def test_schedule_respects_paper_inequalities():
    for r in (4, 8, 16, 32):
        s = make_schedule(r)
        assert s.L > 4 * s.R
        assert s.L % 2 == 0
        assert s.R >= 1 and s.E >= 1
        assert s.core >= s.L + s.R + s.E


def test_cover_amalgam_fixture_values(dinf_amalgam, z4z2z4_amalgam):
    for ctx, rs in ((dinf_amalgam, (4, 8)), (z4z2z4_amalgam, (4, 8))):
        for r in rs:
            cert = cover_amalgam(ctx, r)
            assert cert.n == 1
            assert cert.n_colors == cert.n + 1
            assert cert.claimed_r >= 1
            assert verify_certificate(cert).passed


def test_cover_amalgam_monotone_reuse(dinf_amalgam):
    # an r-certificate's families are r'-disjoint for every r' < claimed_r
    cert = cover_amalgam(dinf_amalgam, 8)
    for color in range(cert.n_colors):
        fam = cert.cover.family(color)
        if len(fam) > 1:
            gap = color_gap(fam, cert.metric)
            for smaller in range(1, int(cert.claimed_r) + 1):
                assert gap >= smaller


def test_cover_amalgam_replays_identically(z2z3_amalgam):
    first = cover_amalgam(z2z3_amalgam, 4)
    second = cover_amalgam(z2z3_amalgam, 4)
    assert first.cover.sets == second.cover.sets
    assert first.cover.colors == second.cover.colors
    assert certificate_json_str(first) == certificate_json_str(second)


def test_cover_union_finite_absorbs_and_verifies(dinf_amalgam):
    cert = cover_amalgam(dinf_amalgam, 4)
    ball = cert.ball
    metric = cert.metric
    sides = prepare(dinf_amalgam, ball.radius, core_radius=cert.core_radius)
    side_arr = sides.side_of_elements()
    left_ids = [i for i in cert.carrier if side_arr[i] != 1]
    right_ids = [i for i in cert.carrier if side_arr[i] == 1]

    def half_cert(ids):
        c = CoverCertificate(
            backend="half",
            requested_r=4,
            claimed_r=0.0,
            claimed_d=0.0,
            n=0,
            cover=Cover(sets=[frozenset(ids)]),
            carrier=sorted(ids),
            ball=ball,
            metric=metric,
            core_radius=cert.core_radius,
            trace={"op": "test-half"},
        )
        return measure_certificate(c)

    merged = cover_union_finite(half_cert(left_ids), half_cert(right_ids), threshold=1)
    assert sorted(merged.carrier) == sorted(cert.carrier)
    assert merged.cover.union() == set(cert.carrier)
    report = verify_certificate(merged)
    assert report.covers and report.order_ok


def test_cover_union_uniform_checks_separation(dinf_amalgam):
    ab = prepare(dinf_amalgam, 12, core_radius=9)
    eng = dinf_amalgam.engine
    dual = ab.dual
    levels = ab.element_level()
    # Lemma 2.1 family {wB : l(w) = 1}: the B-cosets entered at level 1
    pieces = []
    for u in dual.vertices_at_level(1, side=SIDE_A):
        anc = dual.ancestor_at_level(dual.vertex_of_element, 1)
        ids = {i for i in range(ab.n) if anc[i] == u and levels[i] <= 2}
        pieces.append(ids)
    fiber = set(int(i) for i in dual.fiber(dual.base()).tolist())
    y_fld = ab.metric.dist_field(sorted(fiber))
    y_r = {i for i in range(ab.n) if y_fld[i] <= 2}
    template = [frozenset({0})]
    translations = [{0: sorted(p)[0]} for p in pieces]
    out = cover_union_uniform(ab.metric, pieces, template, translations, 2, core_ids=y_r)
    assert len(out) == len(pieces)

    # failure carries a witness pair when the pieces are not separated
    overlapping = [set(range(0, 5)), set(range(3, 8))]
    with pytest.raises(PreconditionError) as err:
        cover_union_uniform(
            ab.metric, overlapping, template, [{0: 0}, {0: 3}], 2, core_ids=set()
        )
    assert err.value.witness == (0, 1)


def test_cover_union_uniform_web_translates(dinf_amalgam):
    # translated copies of a D_R cover across levels n*r assemble into an
    # (R, d)-cover of the boundary union Z; separation comes from the
    # translate-disjointness statement and is re-checked exactly here
    from asdimlab.amalgam import compute_D_R

    r, big_r = 8, 2
    ab = prepare(dinf_amalgam, 24, core_radius=24 - 3 * big_r)
    dual = ab.dual
    translates = [compute_D_R(ab, dual.base(), big_r, side=SIDE_A)]
    for lvl in range(r, int(dual.level.max()) + 1, r):
        for u in dual.vertices_at_level(lvl, side=SIDE_A):
            ids = compute_D_R(ab, u, big_r)
            if len(ids):
                translates.append(ids)
    assert len(translates) >= 2
    pieces = [set(int(i) for i in t) for t in translates]
    template = [frozenset(range(len(pieces[0])))]
    trans = [dict(enumerate(sorted(p))) for p in pieces]
    out = cover_union_uniform(ab.metric, pieces, template, trans, 2 * big_r)
    assert set().union(*out) == set().union(*pieces)
    assert color_gap(out, ab.metric) >= 2 * big_r


def test_cover_product_region_contains_projected_balls(dinf_amalgam):
    # pi^{-1}(B_s) subset (AB)^{s+1}: membership scan
    ab = prepare(dinf_amalgam, 10, core_radius=8)
    levels = ab.element_level()
    for s in (1, 2, 3):
        region = product_region(ab, s + 1)
        inside = levels <= s
        assert bool(np.all(region[inside]))


def test_cover_product_dinf(dinf_amalgam):
    ab = prepare(dinf_amalgam, 12, core_radius=9)
    cert = cover_product(ab, 2, 4)
    assert cert.n == 0
    report = verify_certificate(cert)
    assert report.passed, list(report.lines())


def test_cover_product_single_factor_pair(z4z2z4_amalgam):
    ab = prepare(z4z2z4_amalgam, 8, core_radius=6)
    cert = cover_product(ab, 1, 2)
    assert verify_certificate(cert).passed


def test_cover_product_rejects_infinite_factors():
    # the 4-path split at b has the infinite 3-path group as its B factor
    from asdimlab.amalgam import RacgAmalgam

    eng = RacgEngine(PATH4, names=["b", "c", "d", "e"])
    ctx = RacgAmalgam(eng, n1=[0, 1], knk=[1], n2=[1, 2, 3], name="path4@b")
    ab = prepare(ctx, 8, core_radius=6)
    with pytest.raises(SchedulingError):
        cover_product(ab, 2, 4)


def test_cover_product_on_finite_factor_racg(path3_amalgam):
    # the 3-path split has finite factors, so the literal induction applies
    ab = prepare(path3_amalgam, 10, core_radius=8)
    cert = cover_product(ab, 2, 2)
    assert verify_certificate(cert).passed


def test_cover_racg_rejects_non_right_angled():
    from asdimlab.errors import UnsupportedBackendError

    with pytest.raises(UnsupportedBackendError):
        cover_racg(CoxeterSystem([[1, 3], [3, 1]]), 4)


def test_cover_amalgam_R_override_precondition(dinf_amalgam):
    with pytest.raises(PreconditionError):
        cover_amalgam(dinf_amalgam, 4, R_override=2)
    cert = cover_amalgam(dinf_amalgam, 10, R_override=2)
    assert cert.trace["schedule"]["R"] == 2
    assert verify_certificate(cert).passed


def test_cover_racg_base_cases():
    z2 = cover_racg(CoxeterSystem([[1]]), 4)
    assert z2.n == 0 and len(z2.cover.sets) == 1
    square = cover_racg(CoxeterSystem([[1, 2], [2, 1]]), 4)
    assert square.n == 0
    assert square.trace["nerve"] == "simplex"


def test_cover_racg_dinf_and_path():
    dinf = cover_racg(CoxeterSystem([[1, 0], [0, 1]]), 4)
    assert dinf.n == 1
    assert verify_certificate(dinf).passed
    path = cover_racg(CoxeterSystem(PATH3), 4)
    assert path.n <= 2
    assert verify_certificate(path).passed


def test_cover_racg_path4():
    cert = cover_racg(CoxeterSystem(PATH4), 4)
    assert cert.n == 1
    assert cert.claimed_r >= 1
    assert verify_certificate(cert).passed


def test_degenerate_splits_rejected(path3_engine):
    from asdimlab.amalgam import RacgAmalgam

    with pytest.raises(InputError):
        RacgAmalgam(path3_engine, n1=[0, 1, 2], knk=[0, 1, 2], n2=[0, 1, 2])


def test_algebraic_diameter_exact_and_bounded(path3_engine):
    from asdimlab.groups import build_ball

    ball = build_ball(path3_engine, 5)
    pts = [ball.elements[i] for i in range(len(ball)) if ball.norms[i] <= 2]
    exact, is_exact = algebraic_diameter(pts, path3_engine, exact_limit=100)
    assert is_exact
    bound, is_exact2 = algebraic_diameter(pts, path3_engine, exact_limit=2)
    assert not is_exact2
    assert bound >= exact


def test_certificate_json_schema(dinf_amalgam):
    cert = cover_amalgam(dinf_amalgam, 4)
    payload = json.loads(certificate_json_str(cert))
    assert set(payload) >= {"r", "d", "n", "colors", "ball", "trace"}
    assert len(payload["colors"]) == cert.n + 1
    ids = {i for color in payload["colors"] for s in color["sets"] for i in s}
    assert ids == set(cert.carrier)
