"""Amalgamated products A *_C B: normal forms z_1...z_k c, the dual graph K
of the Bass-Serre tree, the projection pi(g) = gC, level structure, the
boundary sets D_R and their translates, and exhaustive finite-scale checkers
for the separation and disjointness statements they satisfy.

Two backends:

* `TableAmalgam` - A and B finite multiplication-table groups, C a common
  subgroup given by index-matched embeddings.  Generators are all
  non-identity factor elements, which makes the word norm of z_1...z_k c
  equal to k (or 0/1 for C-elements), so the engine has an exact metric.
* `RacgAmalgam` - the splitting Gamma_{N1} *_{Gamma_K} Gamma_{N2} of a
  right-angled Coxeter group along a nerve decomposition; all three
  subgroups are parabolic and carry the restricted word metric exactly.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

import numpy as np

from .errors import InputError, OutOfBallError, PreconditionError
from .groups import Ball, FiniteTableGroup, RacgEngine, build_ball
from .metric import UNREACHED, GraphMetric

SIDE_A, SIDE_B, SIDE_BASE = 0, 1, -1
_SIDE_NAME = {SIDE_A: "A", SIDE_B: "B", SIDE_BASE: "base"}


# ---------------------------------------------------------------------------
# table-backed amalgam engine


class TableAmalgamEngine:
    """Group engine for A *_C B over finite table groups.

    Elements are pairs (zs, c): zs a tuple of letters (side, coset_index)
    naming non-trivial C-cosets of the factors in alternating sides, c an
    element index of C.  Multiplication folds one factor generator at a time
    through the coset tables, so normal forms are maintained exactly.
    """

    def __init__(self, a: FiniteTableGroup, b: FiniteTableGroup, embed_a, embed_b):
        self.a, self.b = a, b
        self.embed = (list(embed_a), list(embed_b))
        if len(self.embed[0]) != len(self.embed[1]):
            raise InputError("C embeddings must have equal length")
        self.c_size = len(self.embed[0])
        for side, grp in ((0, a), (1, b)):
            seen = set(self.embed[side])
            if len(seen) != self.c_size:
                raise InputError("C embedding has repeated elements")
            if grp.identity not in seen:
                raise InputError("C embedding must contain the identity")
        self._emb_inv = (
            {e: i for i, e in enumerate(self.embed[0])},
            {e: i for i, e in enumerate(self.embed[1])},
        )
        self._check_embeddings_agree()
        if self.c_size == a.size or self.c_size == b.size:
            raise InputError("degenerate amalgam: C equals a factor")
        for side, grp in ((0, a), (1, b)):
            if sorted(grp.generators) != sorted(
                g for g in range(grp.size) if g != grp.identity
            ):
                raise InputError(
                    "table amalgam factors must use all non-identity elements "
                    "as generators (diameter-1 convention)"
                )
        self.c_identity = self._emb_inv[0][a.identity]
        self.identity = ((), self.c_identity)
        self._build_cosets()
        self._build_generators()
        self.c_group = self._build_c_group()

    def _check_embeddings_agree(self):
        ea, eb = self.embed
        for i in range(self.c_size):
            for j in range(self.c_size):
                pa = self._emb_inv[0].get(self.a.table[ea[i]][ea[j]])
                pb = self._emb_inv[1].get(self.b.table[eb[i]][eb[j]])
                if pa is None or pb is None or pa != pb:
                    raise InputError("C embeddings do not agree on multiplication")

    def _build_cosets(self):
        # left cosets x C per factor; coset 0 is C itself, never a letter
        self.coset_of = []
        self.cosets = []
        for side, grp in ((0, self.a), (1, self.b)):
            emb = self.embed[side]
            assignment = [-1] * grp.size
            cosets = []
            for x in range(grp.size):
                if assignment[x] >= 0:
                    continue
                members = sorted(grp.table[x][e] for e in emb)
                cid = len(cosets)
                cosets.append(members)
                for m in members:
                    assignment[m] = cid
            order = sorted(
                range(len(cosets)),
                key=lambda cid: min(
                    (grp.norm(m), m) for m in cosets[cid]
                ),
            )
            # reorder so the C-coset (containing identity) is index 0
            remap = {old: new for new, old in enumerate(order)}
            self.cosets.append([cosets[old] for old in order])
            self.coset_of.append([remap[cid] for cid in assignment])
        self.sections = self.default_sections()

    def default_sections(self):
        """ShortLex-minimal representative per coset (identity for C)."""
        out = []
        for side, grp in ((0, self.a), (1, self.b)):
            reps = [
                min(members, key=lambda m: (grp.norm(m), m))
                for members in self.cosets[side]
            ]
            reps[0] = grp.identity
            out.append(reps)
        return out

    def random_sections(self, seed):
        """Seeded alternative sections; the C-coset keeps the identity rep."""
        out = []
        for side in (0, 1):
            reps = []
            for cid, members in enumerate(self.cosets[side]):
                if cid == 0:
                    reps.append((self.a, self.b)[side].identity)
                else:
                    rng = random.Random(f"{seed}:{side}:{cid}")
                    reps.append(rng.choice(sorted(members)))
            out.append(reps)
        return out

    def _build_generators(self):
        gens = []
        names = []
        c_images_in_b = {self.embed[1][i] for i in range(self.c_size)}
        for x in range(self.a.size):
            if x != self.a.identity:
                gens.append((0, x))
                names.append(f"A.{self.a.names[x]}")
        for x in range(self.b.size):
            if x != self.b.identity and x not in c_images_in_b:
                gens.append((1, x))
                names.append(f"B.{self.b.names[x]}")
        self.gens = gens
        self.gen_count = len(gens)
        self.gen_names = names

    def _build_c_group(self):
        ea = self.embed[0]
        table = [
            [self._emb_inv[0][self.a.table[ea[i]][ea[j]]] for j in range(self.c_size)]
            for i in range(self.c_size)
        ]
        names = [self.a.names[ea[i]] for i in range(self.c_size)]
        return FiniteTableGroup(table, names=names)

    # -- elementary algebra -------------------------------------------------

    def mul_elem(self, x, side, s, sections=None):
        """Right-multiply normal form x by factor element s of `side`."""
        reps = (sections or self.sections)[side]
        grp = (self.a, self.b)[side]
        emb, emb_inv = self.embed[side], self._emb_inv[side]
        zs, c = x
        v = grp.table[emb[c]][s]
        if zs and zs[-1][0] == side:
            v = grp.table[reps[zs[-1][1]]][v]
            zs = zs[:-1]
        ci = emb_inv.get(v)
        if ci is not None:
            return (zs, ci)
        cid = self.coset_of[side][v]
        tail = grp.table[grp.inv[reps[cid]]][v]
        return (zs + ((side, cid),), emb_inv[tail])

    def mul_gen(self, x, gi):
        side, s = self.gens[gi]
        return self.mul_elem(x, side, s)

    def normal_form(self, word):
        x = self.identity
        for gi in word:
            x = self.mul_gen(x, gi)
        return x

    def multiply(self, x, y):
        out = x
        yzs, yc = y
        for side, cid in yzs:
            out = self.mul_elem(out, side, self.sections[side][cid])
        if yc != self.c_identity:
            out = self.mul_elem(out, 0, self.embed[0][yc])
        return out

    def inverse(self, x):
        zs, c = x
        out = self.identity
        if c != self.c_identity:
            out = self.mul_elem(out, 0, self.a.inv[self.embed[0][c]])
        for side, cid in reversed(zs):
            grp = (self.a, self.b)[side]
            out = self.mul_elem(out, side, grp.inv[self.sections[side][cid]])
        return out

    def norm(self, x):
        zs, c = x
        if zs:
            return len(zs)
        return 0 if c == self.c_identity else 1

    def distance(self, x, y):
        return self.norm(self.multiply(self.inverse(x), y))

    def level(self, x):
        return len(x[0])

    def word_str(self, x):
        zs, c = x
        parts = []
        for side, cid in zs:
            grp = (self.a, self.b)[side]
            parts.append(("A." if side == 0 else "B.") + grp.names[self.sections[side][cid]])
        if c != self.c_identity:
            parts.append("C." + self.c_group.names[c])
        return ".".join(parts) if parts else "e"


# ---------------------------------------------------------------------------
# contexts


class AmalgamContext:
    """Shared amalgam interface consumed by the dual graph and the builder."""

    name: str
    engine: object
    c_engine: object

    def is_in_c(self, x):
        raise NotImplementedError

    def in_factor(self, x):
        """SIDE_A / SIDE_B when x lies in that factor (C reports SIDE_A), else None."""
        raise NotImplementedError

    def vertex_key(self, x):
        raise NotImplementedError

    def dist_to_c(self, x):
        raise NotImplementedError

    def to_c(self, x):
        raise NotImplementedError

    def section(self, side, x, sections=None):
        raise NotImplementedError

    def gate_tail(self, inv_gate_rep, x):
        """Decompose x = g_u . m . c against a gate representative: returns
        (|m|, c) with m the minimal coset representative of g_u^{-1} x and c
        an element of the C engine.  Exact word arithmetic, no enumeration."""
        raise NotImplementedError

    def factor_dims(self):
        """(n_A, n_B, n_C): the asdim numbers the recursion assigns."""
        raise NotImplementedError


class TableAmalgam(AmalgamContext):
    def __init__(self, a, b, embed_a, embed_b, name="table-amalgam"):
        self.engine = TableAmalgamEngine(a, b, embed_a, embed_b)
        self.c_engine = self.engine.c_group
        self.name = name

    def is_in_c(self, x):
        return not x[0]

    def in_factor(self, x):
        zs, _ = x
        if not zs:
            return SIDE_A
        if len(zs) == 1:
            return zs[0][0]
        return None

    def vertex_key(self, x):
        return x[0]

    def dist_to_c(self, x):
        return self.engine.level(x)

    def to_c(self, x):
        if x[0]:
            raise InputError("element not in C")
        return x[1]

    def from_c(self, cx):
        return ((), cx)

    def section(self, side, x, sections=None):
        zs, c = x
        if not zs:
            return self.engine.identity
        if len(zs) != 1 or zs[0][0] != side:
            raise InputError("element not in the requested factor")
        reps = (sections or self.engine.sections)[side]
        return self.engine.mul_elem(
            self.engine.identity, side, reps[zs[0][1]], sections=sections
        )

    def gate_tail(self, inv_gate_rep, x):
        zs, c = self.engine.multiply(inv_gate_rep, x)
        return len(zs), c

    def piece_key(self, x, side):
        """Canonical key of the Bass-Serre vertex x*A (side 0) or x*B."""
        zs, _ = x
        if zs and zs[-1][0] == side:
            zs = zs[:-1]
        return zs

    def factor_dims(self):
        return 0, 0, 0

    def random_sections(self, seed):
        return self.engine.random_sections(seed)


class RacgAmalgam(AmalgamContext):
    """Splitting of a right-angled Coxeter group along parabolic subgroups.

    `n1`, `knk`, `n2` are letter-index subsets of the ambient engine with
    n1 | n2 = all letters and n1 & n2 = knk.
    """

    def __init__(self, engine: RacgEngine, n1, knk, n2, name="racg-amalgam"):
        self.engine = engine
        self.n1 = frozenset(n1)
        self.k = frozenset(knk)
        self.n2 = frozenset(n2)
        if self.n1 | self.n2 != set(range(engine.rank)):
            raise InputError("factor letter sets must cover all generators")
        if self.n1 & self.n2 != self.k:
            raise InputError("factor letter sets must intersect in K")
        if self.k == self.n1 or self.k == self.n2:
            raise InputError("degenerate amalgam: C equals a factor")
        self.name = name
        self.c_engine, self._c_letters = engine.sub_engine(sorted(self.k))
        self._c_pos = {letter: i for i, letter in enumerate(self._c_letters)}
        self._section_cache = {}

    def is_in_c(self, x):
        return frozenset(x) <= self.k

    def in_factor(self, x):
        sup = frozenset(x)
        if sup <= self.k:
            return SIDE_A
        if sup <= self.n1:
            return SIDE_A
        if sup <= self.n2:
            return SIDE_B
        return None

    def vertex_key(self, x):
        return self.engine.coset_minrep(x, self.k)

    def dist_to_c(self, x):
        return len(self.engine.coset_minrep(self.engine.inverse(x), self.k))

    def to_c(self, x):
        if not self.is_in_c(x):
            raise InputError("element not in C")
        return tuple(self._c_pos[g] for g in x)

    def from_c(self, cx):
        return self.engine.normal_form(tuple(self._c_letters[g] for g in cx))

    def section(self, side, x, sections=None):
        if sections is not None:
            key = (side, self.engine.coset_minrep(x, self.k))
            return sections(key)
        return self.engine.coset_minrep(x, self.k)

    def gate_tail(self, inv_gate_rep, x):
        y = self.engine.multiply(inv_gate_rep, x)
        m = self.engine.coset_minrep(y, self.k)
        c = self.engine.multiply(self.engine.inverse(m), y)
        return len(m), self.to_c(c)

    def piece_key(self, x, side):
        letters = self.n1 if side == SIDE_A else self.n2
        return self.engine.coset_minrep(x, letters)

    def random_sections(self, seed):
        """Section function keyed by coset minrep; identity coset stays identity."""
        c_ball = sorted(build_ball(self.c_engine, 2).elements)

        def sect(key):
            side, minrep = key
            if not minrep:
                return self.engine.identity
            token = f"{seed}:{side}:{self.engine.word_str(minrep)}"
            digest = int(hashlib.sha256(token.encode()).hexdigest(), 16)
            cx = c_ball[digest % len(c_ball)]
            return self.engine.multiply(minrep, self.from_c(cx))

        return sect

    def factor_dims(self):
        from .coxeter import CoxeterSystem, asdim_recursive

        def dim_of(letters):
            letters = sorted(letters)
            if not letters:
                return 0
            sub = [[self.engine.matrix[i][j] for j in letters] for i in letters]
            return asdim_recursive(
                CoxeterSystem(sub, names=[self.engine.names[i] for i in letters])
            )

        return dim_of(self.n1), dim_of(self.n2), dim_of(self.k)


# ---------------------------------------------------------------------------
# dual graph


@dataclass
class DualGraph:
    """The graph K on cosets gC restricted to a ball, with level structure.

    Pieces are the cliques spanned by the cosets sharing one Bass-Serre
    vertex; edges are implicit (all pairs within a piece)."""

    keys: list
    key_index: dict
    vertex_of_element: np.ndarray
    level: np.ndarray
    parent: np.ndarray
    side: np.ndarray
    rep_element: list
    rep_id: np.ndarray
    piece_members: list
    piece_of_vertex: np.ndarray
    piece_side: list

    @property
    def n_vertices(self):
        return len(self.keys)

    def fiber(self, u):
        return np.nonzero(self.vertex_of_element == u)[0]

    def base(self):
        return int(np.nonzero(self.level == 0)[0][0])

    def ancestor_at_level(self, vertices, target):
        cur = np.asarray(vertices, dtype=np.int64).copy()
        for _ in range(int(self.level.max()) + 1):
            mask = self.level[cur] > target
            if not mask.any():
                break
            cur[mask] = self.parent[cur[mask]]
        return np.where(self.level[cur] == target, cur, -1)

    def is_ancestor(self, u, v):
        """u <= v in the partial order: u lies on the K-geodesic [C, v]."""
        anc = self.ancestor_at_level([v], int(self.level[u]))[0]
        return int(anc) == int(u)

    def vertices_at_level(self, lvl, side=None):
        out = [
            u
            for u in range(self.n_vertices)
            if self.level[u] == lvl and (side is None or self.side[u] == side)
        ]
        return sorted(out, key=lambda u: int(self.rep_id[u]))


def build_dual_graph(ctx: AmalgamContext, ball: Ball) -> DualGraph:
    """K on the ball's cosets, with pieces (Bass-Serre vertex cliques) driving
    the level BFS: every coset belongs to one A-piece and one B-piece; each
    piece is entered through its unique lowest vertex (the gate), and all
    other members sit one level above it."""
    keys = []
    key_index = {}
    vertex_of = np.empty(len(ball), dtype=np.int64)
    rep_id = []
    for i, x in enumerate(ball.elements):
        k = ctx.vertex_key(x)
        vid = key_index.get(k)
        if vid is None:
            vid = len(keys)
            key_index[k] = vid
            keys.append(k)
            rep_id.append(i)
        vertex_of[i] = vid
    n = len(keys)
    rep_id = np.asarray(rep_id, dtype=np.int64)
    rep_element = [ball.elements[i] for i in rep_id]

    piece_ids = (dict(), dict())
    piece_members = []
    piece_of_vertex = np.empty((n, 2), dtype=np.int64)
    for u in range(n):
        for s in (SIDE_A, SIDE_B):
            pk = (s, ctx.piece_key(rep_element[u], s))
            pid = piece_ids[s].get(pk[1])
            if pid is None:
                pid = len(piece_members)
                piece_ids[s][pk[1]] = pid
                piece_members.append([])
            piece_members[pid].append(u)
            piece_of_vertex[u, s] = pid

    base = int(vertex_of[0])
    level = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    level[base] = 0
    piece_done = [False] * len(piece_members)
    frontier = [base]
    while frontier:
        nxt = []
        for u in frontier:
            for s in (SIDE_A, SIDE_B):
                pid = int(piece_of_vertex[u, s])
                if piece_done[pid]:
                    continue
                piece_done[pid] = True
                for v in piece_members[pid]:
                    if v == u:
                        continue
                    if level[v] >= 0:
                        raise AssertionError(
                            "tree-graded structure violated: piece with two gates"
                        )
                    level[v] = level[u] + 1
                    parent[v] = u
                    nxt.append(v)
        frontier = sorted(nxt)

    if (level < 0).any():
        raise OutOfBallError("dual graph disconnected inside the ball")

    side = np.full(n, SIDE_BASE, dtype=np.int64)
    order = sorted(range(n), key=lambda u: (int(level[u]), int(rep_id[u])))
    for u in order:
        if level[u] == 1:
            f = ctx.in_factor(rep_element[u])
            if f is None:
                raise AssertionError("level-1 coset not inside a factor")
            side[u] = f
        elif level[u] > 1:
            side[u] = side[parent[u]]

    piece_side = [SIDE_A] * len(piece_members)
    for pid in piece_ids[SIDE_B].values():
        piece_side[pid] = SIDE_B

    return DualGraph(
        keys=keys,
        key_index=key_index,
        vertex_of_element=vertex_of,
        level=level,
        parent=parent,
        side=side,
        rep_element=rep_element,
        rep_id=rep_id,
        piece_members=[sorted(m) for m in piece_members],
        piece_of_vertex=piece_of_vertex,
        piece_side=piece_side,
    )


@dataclass
class AmalgamBall:
    """A ball with its dual graph, graph metric, and side labels."""

    ctx: AmalgamContext
    ball: Ball
    dual: DualGraph
    metric: GraphMetric
    core_radius: int

    @property
    def n(self):
        return len(self.ball)

    def core_mask(self):
        return self.ball.norms <= self.core_radius

    def side_of_elements(self):
        return self.dual.side[self.dual.vertex_of_element]

    def fiber_field(self, u):
        fiber = self.dual.fiber(u).tolist()
        return self.metric.dist_field(fiber)

    def element_level(self):
        return self.dual.level[self.dual.vertex_of_element]


def prepare(ctx: AmalgamContext, ball_radius, core_radius=None, cap=None) -> AmalgamBall:
    kwargs = {} if cap is None else {"cap": cap}
    ball = build_ball(ctx.engine, ball_radius, **kwargs)
    dual = build_dual_graph(ctx, ball)
    if core_radius is None:
        core_radius = ball_radius
    return AmalgamBall(
        ctx=ctx, ball=ball, dual=dual, metric=ball.graph_metric(), core_radius=core_radius
    )


# ---------------------------------------------------------------------------
# normal forms


@dataclass
class NormalFormAm:
    letters: list
    sides: list
    c_part: object
    length: int

    def __iter__(self):
        return iter(self.letters)


def amalgam_normal_form(ab: AmalgamBall, x, sections=None) -> NormalFormAm:
    """The unique z_1...z_k c presentation, for the fixed (or given) sections.

    Walks the K-geodesic from the base coset to pi(x), reading one section
    representative per step; the tail c is the remaining C-element.
    """
    ctx, dual = ab.ctx, ab.dual
    key = ctx.vertex_key(x)
    vid = dual.key_index.get(key)
    if vid is None:
        raise OutOfBallError("element's coset not present in the enumerated ball")
    path = [vid]
    while dual.level[path[-1]] > 0:
        path.append(int(dual.parent[path[-1]]))
    path.reverse()

    eng = ctx.engine
    prefix = eng.identity
    letters, sides = [], []
    for u in path[1:]:
        h = eng.multiply(eng.inverse(prefix), dual.rep_element[u])
        side = ctx.in_factor(h)
        if side is None:
            raise AssertionError("dual-graph step does not lie in a factor")
        z = ctx.section(side, h, sections=sections)
        letters.append(z)
        sides.append(side)
        prefix = eng.multiply(prefix, z)
    c = eng.multiply(eng.inverse(prefix), x)
    if not ctx.is_in_c(c):
        raise AssertionError("normal-form tail not in C")
    for s1, s2 in zip(sides, sides[1:]):
        if s1 == s2:
            raise AssertionError("normal form letters fail to alternate")
    return NormalFormAm(letters=letters, sides=sides, c_part=c, length=len(letters))


def project_pi(ab: AmalgamBall, x):
    """pi(g) = gC as a dual-graph vertex id."""
    key = ab.ctx.vertex_key(x)
    vid = ab.dual.key_index.get(key)
    if vid is None:
        raise OutOfBallError("coset outside enumerated ball")
    return vid


# ---------------------------------------------------------------------------
# checkers


@dataclass
class CheckVerdict:
    name: str
    passed: bool
    checked: int
    witness: object = None
    note: str = ""

    def line(self):
        status = "pass" if self.passed else "FAIL"
        extra = f" witness={self.witness}" if self.witness is not None else ""
        note = f" ({self.note})" if self.note else ""
        return f"{self.name}: {status} [{self.checked} checks]{extra}{note}"


def check_assertion_2_1(ab: AmalgamBall) -> CheckVerdict:
    """Every Cayley edge maps to a K-vertex or a K-edge between factor-adjacent
    cosets; hence pi extends simplicially and is 1-Lipschitz."""
    ctx, dual, ball = ab.ctx, ab.dual, ab.ball
    eng = ctx.engine
    checked = 0
    for u, v in ball.cayley_edges():
        ku, kv = int(dual.vertex_of_element[u]), int(dual.vertex_of_element[v])
        checked += 1
        if ku == kv:
            continue
        h = eng.multiply(eng.inverse(dual.rep_element[ku]), dual.rep_element[kv])
        if ctx.in_factor(h) is None:
            return CheckVerdict(
                "assertion-2.1",
                False,
                checked,
                witness=(eng.word_str(ball.elements[u]), eng.word_str(ball.elements[v])),
            )
        if abs(int(dual.level[ku]) - int(dual.level[kv])) > 1:
            return CheckVerdict(
                "assertion-2.1",
                False,
                checked,
                witness=(u, v),
                note="projection not 1-Lipschitz on this edge",
            )
    return CheckVerdict("assertion-2.1", True, checked)


def check_assertion_2_2(ab: AmalgamBall, sections=None, max_norm=None) -> CheckVerdict:
    """||gamma|| >= d(z_k c, C) for the normal presentation, any sections.

    Everything here is exact word arithmetic, so the scan covers the whole
    enumerated ball by default.
    """
    ctx, ball = ab.ctx, ab.ball
    eng = ctx.engine
    checked = 0
    limit = ball.radius if max_norm is None else max_norm
    for i, x in enumerate(ball.elements):
        if ball.norms[i] > limit:
            continue
        nf = amalgam_normal_form(ab, x, sections=sections)
        if nf.length == 0:
            continue
        tail = eng.multiply(nf.letters[-1], nf.c_part)
        checked += 1
        if eng.norm(x) < ctx.dist_to_c(tail):
            return CheckVerdict(
                "assertion-2.2", False, checked, witness=eng.word_str(x)
            )
    return CheckVerdict("assertion-2.2", True, checked)


def compute_D_R(ab: AmalgamBall, u, R, side=None):
    """D_R^u: elements at exact distance R from the coset of u, on u's far side
    (for the base vertex, on the requested side of K)."""
    if R < 1:
        raise PreconditionError("compute_D_R requires R >= 1")
    dual = ab.dual
    if ab.core_radius + R > ab.ball.radius:
        raise OutOfBallError(
            "ball cannot certify exact distance-R spheres on its core",
            needed_radius=ab.core_radius + R,
        )
    field = ab.fiber_field(u)
    at_R = field == R
    lvl = int(dual.level[u])
    if lvl == 0:
        if side is None:
            raise InputError("base-vertex D_R needs a side (SIDE_A or SIDE_B)")
        sides = ab.side_of_elements()
        mask = at_R & (sides == side)
    else:
        if lvl % 2 != 0:
            raise PreconditionError("translate D_R^u defined for even-level u")
        anc = dual.ancestor_at_level(dual.vertex_of_element, lvl)
        mask = at_R & (anc == u)
    mask &= ab.core_mask()
    return np.nonzero(mask)[0]


def beyond_set(ab: AmalgamBall, u, R, side=None, strict=False):
    """{x : pi(x) in K^u and d(x, g_u C) >= R} (or > R when strict); for the
    base vertex restricted to the given side."""
    dual = ab.dual
    field = ab.fiber_field(u)
    far = field > R if strict else field >= R
    lvl = int(dual.level[u])
    if lvl == 0:
        if side is None:
            raise InputError("base-vertex beyond-set needs a side")
        sides = ab.side_of_elements()
        return far & (sides == side)
    anc = dual.ancestor_at_level(dual.vertex_of_element, lvl)
    return far & (anc == u)


def check_separation(ab: AmalgamBall, u, u_prime, R, boundary_override=None) -> CheckVerdict:
    """Prop 2.1: D_R^u separates pi^{-1}(v) from pi^{-1}(u') for every v
    incomparable with u or below it, whenever u < u' and |u'| - |u| > R.

    `boundary_override` substitutes the separating set (fault-injection
    fixture support); the default is the computed D_R^u."""
    dual = ab.dual
    lu, lup = int(dual.level[u]), int(dual.level[u_prime])
    if lu % 2 != 0:
        raise PreconditionError("separation stated for even-level u")
    if not (lup - lu > R):
        raise PreconditionError(
            f"requires |u'| - |u| > R (got {lup} - {lu} <= {R})"
        )
    if lu > 0 and not dual.is_ancestor(u, u_prime):
        raise PreconditionError("requires u < u'")
    side = int(dual.side[u_prime]) if lu == 0 else None
    d_set = compute_D_R(ab, u, R, side=side)
    if boundary_override is not None:
        d_set = np.asarray(sorted(boundary_override), dtype=np.int64)
    # restrict the path search to the core, where the distance-R
    # classification of D_R is exact; shell points with uncertain membership
    # must neither block nor carry paths
    core = ab.core_mask()
    outside_core = np.nonzero(~core)[0].tolist()
    masked = ab.metric.masked(d_set.tolist() + outside_core)
    labels = masked.components()

    interior = core & (ab.ball.norms <= ab.ball.radius - 1)
    fiber_up = [i for i in dual.fiber(u_prime).tolist() if interior[i]]
    if not fiber_up:
        raise OutOfBallError("pi^{-1}(u') has no interior witnesses in the core")
    up_components = np.unique([labels[i] for i in fiber_up])

    # which vertices v the statement covers: v < u or incomparable with u
    # (for the base vertex: the opposite side of K)
    nv = dual.n_vertices
    valid_v = np.ones(nv, dtype=bool)
    valid_v[u] = valid_v[u_prime] = False
    if lu > 0:
        anc_u = dual.ancestor_at_level(np.arange(nv), lu)
        valid_v &= ~((anc_u == u) & (dual.level > lu))
    else:
        opposite = SIDE_B if int(dual.side[u_prime]) == SIDE_A else SIDE_A
        valid_v &= dual.side == opposite

    blocked = np.zeros(ab.n, dtype=bool)
    blocked[d_set] = True
    candidates = interior & ~blocked & valid_v[dual.vertex_of_element]
    checked = int(candidates.sum())
    leaks = candidates & np.isin(labels, up_components)
    if leaks.any():
        i = int(np.nonzero(leaks)[0][0])
        return CheckVerdict(
            "prop-2.1-separation",
            False,
            checked,
            witness=(int(dual.vertex_of_element[i]), i),
            note="path avoiding D_R^u exists inside the ball",
        )
    return CheckVerdict("prop-2.1-separation", True, checked)


def check_translate_disjointness(ab: AmalgamBall, r, R) -> CheckVerdict:
    """Prop 2.2: translates of D_R at level multiples of r are 2R-disjoint,
    and 3R-disjoint across unequal levels."""
    if R > r / 4:
        raise PreconditionError("requires R <= r/4")
    if ab.core_radius + 3 * R > ab.ball.radius:
        raise OutOfBallError(
            "disjointness claims need core_radius + 3R <= ball radius",
            needed_radius=ab.core_radius + 3 * R,
        )
    dual = ab.dual
    levels = range(0, int(dual.level.max()) + 1, r)
    translates = []
    for lvl in levels:
        if lvl == 0:
            ids = compute_D_R(ab, dual.base(), R, side=SIDE_A)
            if len(ids):
                translates.append((dual.base(), 0, ids))
            continue
        for u in dual.vertices_at_level(lvl, side=SIDE_A):
            ids = compute_D_R(ab, u, R)
            if len(ids):
                translates.append((u, lvl, ids))
    checked = 0
    for i in range(len(translates)):
        ui, li, si = translates[i]
        field = ab.metric.dist_field(si.tolist())
        for j in range(i + 1, len(translates)):
            uj, lj, sj = translates[j]
            d = min(field[k] for k in sj)
            d = float("inf") if d >= UNREACHED else float(d)
            checked += 1
            need = 3 * R if li != lj else 2 * R
            if d < need:
                return CheckVerdict(
                    "prop-2.2-disjointness",
                    False,
                    checked,
                    witness=(int(ui), int(uj), d),
                    note=f"needed >= {need}",
                )
    return CheckVerdict(
        "prop-2.2-disjointness", True, checked, note=f"{len(translates)} translates"
    )


# ---------------------------------------------------------------------------
# partition


@dataclass
class Partition:
    """{V_r^u} at level multiples of r plus the central piece N_R(C) per side."""

    r: int
    R: int
    side: int
    central: np.ndarray
    pieces: list  # (vertex id, np.ndarray of element ids)
    boundary: np.ndarray  # union of D_R^u over the slab gates

    def piece_map(self):
        return {u: ids for u, ids in self.pieces}


def partition_ball(ab: AmalgamBall, r, R, side) -> Partition:
    """Theorem 2.1's partition of pi^{-1}(K_side) restricted to the core."""
    if r <= 4 * R:
        raise PreconditionError(f"partition requires r > 4R (r={r}, R={R})")
    if R < 1:
        raise PreconditionError("partition requires R >= 1")
    if r % 2 != 0:
        raise PreconditionError("slab spacing r must be even (even-level gates)")
    dual = ab.dual
    core = ab.core_mask()
    sides = ab.side_of_elements()
    on_side = (sides == side) | (sides == SIDE_BASE)

    base = dual.base()
    base_field = ab.fiber_field(base)
    central = np.nonzero(core & on_side & (base_field <= R))[0]

    max_level = int(dual.level.max())
    gates = [(base, 0)]
    for lvl in range(r, max_level + 1, r):
        for u in dual.vertices_at_level(lvl, side=side):
            gates.append((u, lvl))

    boundary_mask = np.zeros(ab.n, dtype=bool)
    pieces = []
    for u, lvl in gates:
        if R >= 1:
            ids = compute_D_R(ab, u, R, side=side if lvl == 0 else None)
            boundary_mask[ids] = True
        mask = beyond_set(ab, u, R, side=side if lvl == 0 else None)
        for w, wl in gates:
            if wl == lvl + r:
                anc = dual.ancestor_at_level([w], lvl)[0]
                if lvl == 0 or int(anc) == int(u):
                    mask &= ~beyond_set(ab, w, R, strict=True)
        ids = np.nonzero(mask & core & on_side)[0]
        if len(ids):
            pieces.append((int(u), ids))

    return Partition(
        r=r,
        R=R,
        side=side,
        central=central,
        pieces=pieces,
        boundary=np.nonzero(boundary_mask)[0],
    )


def verify_partition(ab: AmalgamBall, part: Partition) -> CheckVerdict:
    """Pieces cover the side-carrier on the core; overlaps only inside D_R
    translates; pi(V_r) stays within r + R levels of the gate."""
    cover = np.zeros(ab.n, dtype=np.int32)
    cover[part.central] += 1
    for _, ids in part.pieces:
        cover[ids] += 1
    core = ab.core_mask()
    sides = ab.side_of_elements()
    carrier = core & ((sides == part.side) | (sides == SIDE_BASE))
    missing = np.nonzero(carrier & (cover == 0))[0]
    if len(missing):
        return CheckVerdict(
            "partition-covers", False, int(carrier.sum()), witness=int(missing[0])
        )
    boundary = set(part.boundary.tolist())
    over = np.nonzero(cover > 1)[0]
    for i in over.tolist():
        if i not in boundary:
            return CheckVerdict(
                "partition-overlaps-in-boundary",
                False,
                int(carrier.sum()),
                witness=i,
                note="overlap point outside the D_R web",
            )
    levels = ab.element_level()
    for u, ids in part.pieces:
        gate_level = int(ab.dual.level[u])
        if len(ids) and int(levels[ids].max()) > gate_level + part.r + part.R:
            return CheckVerdict(
                "partition-level-bound",
                False,
                int(carrier.sum()),
                witness=int(u),
                note="pi(V_r^u) leaves B_{r+R}^u",
            )
    return CheckVerdict("partition", True, int(carrier.sum()))


# ---------------------------------------------------------------------------
# exports


def dual_graph_dot(ab: AmalgamBall) -> str:
    """DOT rendering of K with levels and piece types Delta(A)/Delta(B)."""
    dual = ab.dual
    eng = ab.ctx.engine
    lines = ["graph dual_graph {", "  node [shape=circle];"]
    for u in range(dual.n_vertices):
        label = eng.word_str(dual.rep_element[u])
        shade = {SIDE_A: "lightblue", SIDE_B: "lightpink", SIDE_BASE: "gray"}[
            int(dual.side[u])
        ]
        lines.append(
            f'  v{u} [label="{label}\\n|u|={int(dual.level[u])}", style=filled, fillcolor={shade}];'
        )
    for pid, members in enumerate(dual.piece_members):
        piece = dual.piece_side[pid]
        style = "solid" if piece == SIDE_A else "dashed"
        for i, u in enumerate(members):
            for v in members[i + 1 :]:
                lines.append(
                    f'  v{u} -- v{v} [style={style}, label="{_SIDE_NAME[piece]}"];'
                )
    lines.append("}")
    return "\n".join(lines) + "\n"


def partition_json(ab: AmalgamBall, part: Partition):
    return {
        "r": part.r,
        "R": part.R,
        "side": _SIDE_NAME[part.side],
        "central": [int(i) for i in part.central],
        "pieces": [
            {"u": int(u), "elements": [int(i) for i in ids]} for u, ids in part.pieces
        ],
        "boundary": [int(i) for i in part.boundary],
    }
