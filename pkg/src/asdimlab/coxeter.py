"""Coxeter systems: nerve construction, dimension/chromatic bounds, recursive
star/link decomposition, and finite-radius Davis-complex gluing.

Only right-angled systems are supported beyond type validation; for them the
nerve is the clique complex of the commutation graph (a parabolic subgroup on
a pairwise-commuting letter set is (Z_2)^W, hence finite, and no other
parabolic is).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import networkx as nx

from .errors import InputError, ResourceCapError, UnsupportedBackendError
from .groups import RacgEngine, build_ball
from .simplicial import SimplicialComplex, barycentric_subdivision, clique_complex, cone


class CoxeterSystem:
    """A Coxeter matrix with named generators; 0 encodes infinity."""

    def __init__(self, matrix, names=None):
        m = [list(row) for row in matrix]
        k = len(m)
        if any(len(row) != k for row in m):
            raise InputError("Coxeter matrix must be square")
        for i in range(k):
            if m[i][i] != 1:
                raise InputError("Coxeter matrix needs unit diagonal")
            for j in range(k):
                if m[i][j] != m[j][i]:
                    raise InputError("Coxeter matrix must be symmetric")
                if i != j and m[i][j] == 1:
                    raise InputError("off-diagonal entries must be >= 2 (0 for infinity)")
        self.matrix = m
        self.rank = k
        self.names = [str(x) for x in (names or (chr(ord("a") + i) for i in range(k)))]
        if len(set(self.names)) != k:
            raise InputError("generator names must be distinct")
        self.right_angled = all(
            m[i][j] in (0, 2) for i in range(k) for j in range(k) if i != j
        )

    @classmethod
    def from_json(cls, data):
        if "matrix" in data:
            return cls(data["matrix"], names=data.get("generators"))
        if "maximal_faces" in data:
            return cls.from_nerve(
                SimplicialComplex(data["vertices"], data["maximal_faces"])
            )
        raise InputError("Coxeter input needs 'matrix' or 'vertices'/'maximal_faces'")

    @classmethod
    def from_nerve(cls, nerve: SimplicialComplex):
        """Right-angled system whose commutation graph is the nerve 1-skeleton."""
        names = [str(v) for v in nerve.vertices]
        pos = {v: i for i, v in enumerate(nerve.vertices)}
        k = len(names)
        m = [[0] * k for _ in range(k)]
        for i in range(k):
            m[i][i] = 1
        for u, v in nerve.edges():
            m[pos[u]][pos[v]] = m[pos[v]][pos[u]] = 2
        return cls(m, names=names)

    def require_right_angled(self):
        if not self.right_angled:
            raise UnsupportedBackendError(
                "operation requires a right-angled system (off-diagonal entries 2 or infinity)"
            )

    def engine(self) -> RacgEngine:
        self.require_right_angled()
        return RacgEngine(self.matrix, names=self.names)

    def commutation_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.names)
        for i in range(self.rank):
            for j in range(i + 1, self.rank):
                if self.matrix[i][j] == 2:
                    g.add_edge(self.names[i], self.names[j])
        return g


def build_nerve(cox: CoxeterSystem) -> SimplicialComplex:
    """Nerve of a right-angled system: the clique complex of commuting pairs."""
    cox.require_right_angled()
    return clique_complex(cox.commutation_graph())


def parabolic_is_finite(cox: CoxeterSystem, letters, cap=10_000):
    """Brute-force finiteness of Gamma_W via BFS closure with an element cap.

    Returns (True, size) when the subgroup closes below the cap and
    (None, cap) as a 'presumed infinite' verdict otherwise.  Test oracle for
    the structural clique criterion.
    """
    letters = sorted(letters)
    if not letters:
        return True, 1
    engine = cox.engine()
    sub, _ = engine.sub_engine(letters)
    try:
        # radius = cap guarantees the BFS either closes (finite group) or
        # trips the element cap in one pass
        ball = build_ball(sub, cap, cap=cap)
    except ResourceCapError:
        return None, cap
    return True, len(ball)


def asdim_bound(cox: CoxeterSystem):
    """(dim N(Gamma) + 1, finite-flag): the Davis-complex dimension bound."""
    nerve = build_nerve(cox)
    return nerve.dim + 1, nerve.is_simplex()


def chromatic_bound(cox: CoxeterSystem, exact_cap=20):
    """Chromatic number of the nerve 1-skeleton.

    Exact branch-and-bound up to `exact_cap` vertices; beyond that the greedy
    bound is returned flagged inexact.  Always >= dim N + 1.
    """
    nerve = build_nerve(cox)
    graph = nerve.skeleton_graph()
    if graph.number_of_nodes() == 0:
        return 0, True
    if graph.number_of_nodes() > exact_cap:
        greedy = nx.coloring.greedy_color(graph, strategy="largest_first")
        return max(greedy.values()) + 1, False
    ch = _chromatic_exact(graph)
    if ch < nerve.dim + 1:
        raise AssertionError("chromatic number below clique bound; coloring bug")
    return ch, True


def _chromatic_exact(graph: nx.Graph):
    order = sorted(graph.nodes, key=lambda v: (-graph.degree(v), str(v)))
    adj = {v: set(graph.neighbors(v)) for v in order}
    clique_lb = max((len(c) for c in nx.find_cliques(graph)), default=1)
    greedy = nx.coloring.greedy_color(graph, strategy="largest_first")
    upper = max(greedy.values()) + 1 if greedy else 1

    def colorable(k):
        colors = {}

        def bt(i, used_max):
            if i == len(order):
                return True
            v = order[i]
            banned = {colors[u] for u in adj[v] if u in colors}
            for c in range(min(k, used_max + 2)):
                if c in banned:
                    continue
                colors[v] = c
                if bt(i + 1, max(used_max, c)):
                    return True
                del colors[v]
            return False

        return bt(0, -1)

    for k in range(clique_lb, upper + 1):
        if colorable(k):
            return k
    return upper


@dataclass
class DecompositionTree:
    """Recursion record of the star/link splittings Gamma = G_N1 *_{G_K} G_N2."""

    vertices: tuple
    split_vertex: str = None
    n1: "DecompositionTree" = None
    k: tuple = None
    n2: "DecompositionTree" = None

    @property
    def is_leaf(self):
        return self.split_vertex is None

    def depth(self):
        if self.is_leaf:
            return 0
        return 1 + max(self.n1.depth(), self.n2.depth())

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            yield from self.n1.leaves()
            yield from self.n2.leaves()

    def to_json(self):
        if self.is_leaf:
            return {"vertices": list(self.vertices), "leaf": "simplex/finite"}
        return {
            "vertices": list(self.vertices),
            "split_vertex": self.split_vertex,
            "n1": self.n1.to_json(),
            "k": list(self.k),
            "n2": self.n2.to_json(),
        }

    def to_dot(self):
        lines = ["digraph decomposition {", '  node [shape=box];']
        counter = [0]

        def walk(node):
            my_id = counter[0]
            counter[0] += 1
            label = ",".join(node.vertices) or "(empty)"
            if node.is_leaf:
                lines.append(f'  n{my_id} [label="{label}"];')
            else:
                lines.append(f'  n{my_id} [label="{label} @ {node.split_vertex}"];')
                for child, role in ((node.n1, "N1"), (node.n2, "N2")):
                    cid = walk(child)
                    lines.append(f'  n{my_id} -> n{cid} [label="{role}"];')
            return my_id

        walk(self)
        lines.append("}")
        return "\n".join(lines) + "\n"


def split_vertex_choice(graph: nx.Graph):
    """Lexicographically first vertex whose closed star omits some vertex."""
    nodes = sorted(graph.nodes, key=str)
    for v in nodes:
        if len(set(graph.neighbors(v))) + 1 < len(nodes):
            return v
    return None


def decompose(cox: CoxeterSystem) -> DecompositionTree:
    """Recursive Theorem-3.1 splitting down to simplex (finite-group) leaves."""
    cox.require_right_angled()
    graph = cox.commutation_graph()

    def rec(vertex_set):
        sub = graph.subgraph(vertex_set)
        v = split_vertex_choice(sub)
        verts = tuple(sorted(vertex_set, key=str))
        if v is None:
            return DecompositionTree(vertices=verts)
        star = tuple(sorted(set(sub.neighbors(v)) | {v}, key=str))
        link = tuple(sorted(sub.neighbors(v), key=str))
        rest = tuple(sorted(set(vertex_set) - {v}, key=str))
        node = DecompositionTree(
            vertices=verts,
            split_vertex=v,
            n1=rec(star),
            k=link,
            n2=rec(rest),
        )
        _validate_split(node)
        return node

    return rec(set(graph.nodes))


def _validate_split(node: DecompositionTree):
    n1, n2, k = set(node.n1.vertices), set(node.n2.vertices), set(node.k)
    if n1 | n2 != set(node.vertices):
        raise AssertionError("split does not cover the nerve")
    if n1 & n2 != k:
        raise AssertionError("split intersection differs from the link")
    if not (len(n1) < len(node.vertices) and len(n2) < len(node.vertices)):
        raise AssertionError("split child not strictly smaller")


def asdim_recursive(cox: CoxeterSystem):
    """The bound the recursive builder realizes: leaves 0, internal nodes
    max(n1, n2, k + 1).  Always <= dim N + 1."""
    cox.require_right_angled()
    graph = cox.commutation_graph()
    memo = {}

    def rec(vertex_set):
        key = frozenset(vertex_set)
        if key in memo:
            return memo[key]
        sub = graph.subgraph(vertex_set)
        v = split_vertex_choice(sub)
        if v is None:
            memo[key] = 0
            return 0
        star = set(sub.neighbors(v)) | {v}
        link = set(sub.neighbors(v))
        rest = set(vertex_set) - {v}
        value = max(rec(star), rec(rest), rec(link) + 1)
        memo[key] = value
        return value

    return rec(set(graph.nodes))


@dataclass
class DavisBall:
    """Gluing of |ball| chambers Cone(N') along the coset identifications."""

    chamber_count: int
    vertex_count: int
    vertex_labels: list
    maximal_simplices: list
    chamber_of_vertex: list
    dim: int

    def skeleton_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.vertex_count))
        for simplex in self.maximal_simplices:
            for i, u in enumerate(simplex):
                for v in simplex[i + 1 :]:
                    g.add_edge(u, v)
        return g

    def to_json(self):
        return {
            "chambers": self.chamber_count,
            "vertices": self.vertex_count,
            "dim": self.dim,
            "vertex_labels": self.vertex_labels,
            "maximal_simplices": [list(s) for s in self.maximal_simplices],
        }


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        fx, fy = self.find(x), self.find(y)
        if fx != fy:
            if fy < fx:
                fx, fy = fy, fx
            self.parent[fy] = fx


def build_davis_ball(cox: CoxeterSystem, radius, cap=200_000) -> DavisBall:
    """Glue the chambers of the Cayley ball: a x v_sigma ~ b x v_sigma iff
    a^{-1} b lies in the parabolic subgroup of the face sigma."""
    cox.require_right_angled()
    engine = cox.engine()
    nerve = build_nerve(cox)
    faces = nerve.faces()  # vertices of N'
    face_index = {f: i for i, f in enumerate(faces)}
    nprime = barycentric_subdivision(nerve)
    apex = len(faces)
    chamber = cone(nprime, apex)

    ball = build_ball(engine, radius, cap=cap)
    letter_of = {name: i for i, name in enumerate(engine.names)}

    n_chambers = len(ball)
    slots = n_chambers * (len(faces) + 1)
    if slots > cap * 4:
        raise ResourceCapError("Davis gluing exceeds cap", cap=cap)
    uf = _UnionFind(slots)

    def slot(chamber_id, cone_vertex):
        return chamber_id * (len(faces) + 1) + cone_vertex

    # identify (gamma, v_sigma) with (gamma s, v_sigma) for s in sigma;
    # the transitive closure realizes a^{-1} b in Gamma_sigma within the ball
    for f, fi in face_index.items():
        gens = [letter_of[str(v)] for v in f]
        for cid, gamma in enumerate(ball.elements):
            for g in gens:
                other = engine.append(gamma, g)
                oid = ball.index.get(other)
                if oid is not None:
                    uf.union(slot(cid, fi), slot(oid, fi))

    roots = {}
    labels = []
    chamber_of = []
    for cid, gamma in enumerate(ball.elements):
        for cv in range(len(faces) + 1):
            root = uf.find(slot(cid, cv))
            if root not in roots:
                roots[root] = len(roots)
                if cv == apex:
                    labels.append(f"{engine.word_str(gamma)}|cone")
                else:
                    face_name = ",".join(str(v) for v in faces[cv])
                    labels.append(f"{engine.word_str(gamma)}|{face_name}")
                chamber_of.append(cid)

    simplices = set()
    for cid in range(n_chambers):
        for mf in chamber.maximal_faces:
            glued = tuple(
                sorted(roots[uf.find(slot(cid, cv))] for cv in mf)
            )
            simplices.add(glued)
    maximal = sorted(simplices)
    dim = max((len(s) - 1 for s in maximal), default=-1)
    return DavisBall(
        chamber_count=n_chambers,
        vertex_count=len(roots),
        vertex_labels=labels,
        maximal_simplices=maximal,
        chamber_of_vertex=chamber_of,
        dim=dim,
    )


def bound_report(cox: CoxeterSystem):
    """Composite report behind the CLI `bound` command."""
    nerve = build_nerve(cox)
    bound, finite = asdim_bound(cox)
    ch, exact = chromatic_bound(cox)
    return {
        "generators": cox.names,
        "nerve_dim": nerve.dim,
        "nerve_maximal_faces": [list(map(str, f)) for f in nerve.maximal_faces],
        "asdim_bound": bound,
        "finite_group": bool(finite),
        "chromatic_bound": ch,
        "chromatic_exact": bool(exact),
        "recursive_bound": asdim_recursive(cox),
    }


def dumps_report(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
