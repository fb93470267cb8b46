"""Covers of finite metric spaces: disjointness, order, Lebesgue number,
diameter, neighborhood extension, nerve, canonical projection.

Conventions (fixed project-wide):

* the Lebesgue number is the literal inf-sup quantity
  L(U) = inf_U sup_x d(x, X \\ U), evaluated over the finite carrier;
* a family containing a set equal to the whole carrier has L = +inf,
  reported as the distinguished value UNBOUNDED;
* the order of a cover is the point order: the maximal number of sets
  through one point (equal to 1 + dim of the nerve, asserted in tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, PreconditionError
from .metric import UNREACHED, FiniteMetric
from .simplicial import SimplicialComplex

UNBOUNDED = math.inf


@dataclass
class Cover:
    """A colored family of point-id subsets.

    `colors[i]` is the color (family index) of `sets[i]`; a plain uncolored
    family uses color 0 everywhere.  `claimed_r` / `claimed_d` carry the
    parameters the producer asserts; verification recomputes them.
    """

    sets: list
    colors: list = None
    claimed_r: float = None
    claimed_d: float = None

    def __post_init__(self):
        self.sets = [frozenset(s) for s in self.sets]
        if self.colors is None:
            self.colors = [0] * len(self.sets)
        if len(self.colors) != len(self.sets):
            raise InputError("one color per set required")
        for s in self.sets:
            if not s:
                raise InputError("cover sets must be non-empty")

    @property
    def n_colors(self):
        return max(self.colors) + 1 if self.sets else 0

    def family(self, color):
        return [s for s, c in zip(self.sets, self.colors) if c == color]

    def union(self):
        out = set()
        for s in self.sets:
            out |= s
        return out


def check_r_disjoint(sets, r, m: FiniteMetric):
    """True iff every two distinct sets of the family are at distance >= r."""
    sets = [frozenset(s) for s in sets]
    for s in sets:
        for x in s:
            m.check_point(x)
    for i, s in enumerate(sets):
        field_i = m.dist_field(sorted(s))
        for j in range(i + 1, len(sets)):
            d = min(field_i[x] for x in sets[j]) if sets[j] else UNREACHED
            if d < r:
                return False
    return True


def min_family_gap(sets, m: FiniteMetric):
    """Smallest pairwise distance within the family (inf for < 2 sets)."""
    sets = [sorted(frozenset(s)) for s in sets]
    best = UNBOUNDED
    for i, s in enumerate(sets):
        if not s:
            continue
        field_i = m.dist_field(s)
        for j in range(i + 1, len(sets)):
            for x in sets[j]:
                v = field_i[x]
                if v < best:
                    best = float(v)
    return best


def cover_order(cover: Cover, carrier):
    """Max number of cover sets through a single carrier point, with witness."""
    best, witness = 0, None
    for x in carrier:
        k = sum(1 for s in cover.sets if x in s)
        if k > best:
            best, witness = k, x
    return best, witness


def _require_covering(cover: Cover, carrier):
    covered = cover.union()
    for x in carrier:
        if x not in covered:
            raise PreconditionError(f"point {x} not covered", witness=x)


def lebesgue_number(cover: Cover, m: FiniteMetric, carrier):
    """The paper's L(U) = inf over sets of the deepest point's distance to the
    complement taken within the carrier; +inf when a set is the whole carrier."""
    carrier = sorted(set(carrier))
    if not cover.sets:
        raise InputError("Lebesgue number of an empty cover")
    _require_covering(cover, carrier)
    best = UNBOUNDED
    witness = None
    carrier_set = set(carrier)
    for i, s in enumerate(cover.sets):
        complement = sorted(carrier_set - s)
        if not complement:
            continue  # d(x, empty) = +inf: this set never attains the inf
        field = m.dist_field(complement)
        depth = max(field[x] for x in carrier)
        depth = UNBOUNDED if depth >= UNREACHED else float(depth)
        if depth < best:
            best, witness = depth, i
    return best, witness


def diameter_bound(cover: Cover, m: FiniteMetric):
    """b(U) = max over sets of the max pairwise distance inside the set."""
    best, witness = 0.0, None
    for i, s in enumerate(cover.sets):
        d = m.diam(sorted(s))
        if d > best:
            best, witness = d, i
    return best, witness


@dataclass
class RdVerdict:
    """Outcome of the (r, d)-cover check: ord <= n+1, L > r, b <= d."""

    order_ok: bool
    order: int
    order_witness: object
    lebesgue_ok: bool
    lebesgue: float
    lebesgue_witness: object
    diameter_ok: bool
    diameter: float
    diameter_witness: object

    @property
    def passed(self):
        return self.order_ok and self.lebesgue_ok and self.diameter_ok

    def lines(self):
        yield f"order <= n+1: {'pass' if self.order_ok else 'FAIL'} (order={self.order}, witness point={self.order_witness})"
        yield f"Lebesgue > r: {'pass' if self.lebesgue_ok else 'FAIL'} (L={self.lebesgue}, witness set={self.lebesgue_witness})"
        yield f"diameter <= d: {'pass' if self.diameter_ok else 'FAIL'} (b={self.diameter}, witness set={self.diameter_witness})"


def check_rd_cover(cover: Cover, r, d, n, m: FiniteMetric, carrier) -> RdVerdict:
    """Verify the three (r, d)-cover conditions at order bound n+1."""
    order, order_w = cover_order(cover, carrier)
    leb, leb_w = lebesgue_number(cover, m, carrier)
    diam, diam_w = diameter_bound(cover, m)
    return RdVerdict(
        order_ok=order <= n + 1,
        order=order,
        order_witness=order_w,
        lebesgue_ok=leb > r,
        lebesgue=leb,
        lebesgue_witness=leb_w,
        diameter_ok=diam <= d,
        diameter=diam,
        diameter_witness=diam_w,
    )


def extend_cover(cover: Cover, r, ambient: FiniteMetric, carrier):
    """Push an (r, d)-cover of `carrier` to an (r/4, d+r)-cover of the r/4
    neighborhood of `carrier` inside `ambient`.

    Each set U is replaced by the union of open r/2-balls around its r-deep
    points, intersected with N_{r/4}(carrier).  Order never increases; the
    output is covering and has Lebesgue number >= r/2 by construction.
    """
    carrier = sorted(set(carrier))
    carrier_set = set(carrier)
    _require_covering(cover, carrier)
    leb, leb_w = lebesgue_number(cover, m=ambient, carrier=carrier)
    if leb <= r:
        raise PreconditionError(
            f"input is not an (r, d)-cover: Lebesgue {leb} <= r={r}", witness=leb_w
        )

    field_to_carrier = ambient.dist_field(carrier)
    new_carrier = sorted(
        x for x in ambient.points if field_to_carrier[x] <= r / 4.0
    )
    new_carrier_set = set(new_carrier)

    out_sets, out_colors = [], []
    for s, color in zip(cover.sets, cover.colors):
        complement = sorted(carrier_set - s)
        if complement:
            depth = ambient.dist_field(complement)
            deep = [x for x in sorted(s) if depth[x] >= r]
        else:
            deep = sorted(s)  # d(x, empty complement) = +inf
        if not deep:
            # cannot happen when L > r; guarded for malformed claimed covers
            raise PreconditionError(
                "set has no r-deep point despite Lebesgue precondition", witness=s
            )
        ball_field = ambient.dist_field(deep)
        enlarged = frozenset(
            y for y in new_carrier if ball_field[y] < r / 2.0
        )
        out_sets.append(enlarged)
        out_colors.append(color)

    out = Cover(sets=out_sets, colors=out_colors)
    for y in new_carrier:
        if not any(y in s for s in out.sets):
            nearest = min(carrier, key=lambda c: ambient.dist(y, c))
            raise PreconditionError(
                "extension does not cover the r/4-neighborhood: no set is "
                f"r-deep near carrier point {nearest}",
                witness=nearest,
            )
    _ = new_carrier_set
    return out, new_carrier


def nerve_of_cover(cover: Cover) -> SimplicialComplex:
    """One vertex per set; a face for every subfamily with a common point."""
    signatures = {}
    for x in sorted(cover.union()):
        sig = frozenset(i for i, s in enumerate(cover.sets) if x in s)
        signatures[sig] = x
    faces = list(signatures)
    maximal = [f for f in faces if not any(f < g for g in faces)]
    # isolated vertices (sets covering points privately) appear as singleton faces
    return SimplicialComplex(
        vertices=list(range(len(cover.sets))),
        maximal_faces=sorted(tuple(sorted(f)) for f in maximal),
    )


def canonical_projection(x, cover: Cover, m: FiniteMetric, carrier):
    """Barycentric coordinates p_U(x) = d(x, X\\U) / sum_V d(x, X\\V)."""
    carrier = sorted(set(carrier))
    carrier_set = set(carrier)
    _require_covering(cover, carrier)
    if x not in carrier_set:
        raise InputError(f"point {x} outside carrier")
    weights = []
    for s in cover.sets:
        complement = sorted(carrier_set - s)
        if not complement:
            weights.append(UNBOUNDED)
            continue
        field = m.dist_field(complement)
        weights.append(float(field[x]))
    if any(w is UNBOUNDED or math.isinf(w) for w in weights):
        # a whole-carrier set absorbs all mass, split among such sets
        full = [i for i, w in enumerate(weights) if math.isinf(w)]
        vec = np.zeros(len(weights))
        vec[full] = 1.0 / len(full)
        return vec
    total = sum(weights)
    if total <= 0:
        raise PreconditionError(
            "all complement distances vanish (requires L > 0 on real metrics)",
            witness=x,
        )
    return np.asarray(weights) / total


def projection_lipschitz(cover: Cover, m: FiniteMetric, carrier, edges):
    """Max l2 displacement of the canonical projection over the given edges.

    The image carries the uniform-complex metric, i.e. the l2 metric on
    barycentric coordinate vectors.
    """
    worst = 0.0
    for u, v in edges:
        pu = canonical_projection(u, cover, m, carrier)
        pv = canonical_projection(v, cover, m, carrier)
        step = m.dist(u, v)
        if step <= 0:
            continue
        worst = max(worst, float(np.linalg.norm(pu - pv)) / step)
    return worst
