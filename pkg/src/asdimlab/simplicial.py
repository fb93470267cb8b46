"""Small simplicial-complex type shared by the nerve and Davis constructions.

A complex is stored as vertices plus its maximal faces; all faces are the
downward closure.  Vertices are hashable labels (ints or strings).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import networkx as nx

from .errors import InputError


@dataclass
class SimplicialComplex:
    vertices: list
    maximal_faces: list

    def __post_init__(self):
        self.vertices = list(self.vertices)
        vset = set(self.vertices)
        faces = [tuple(sorted(set(f), key=_key)) for f in self.maximal_faces]
        for f in faces:
            if not set(f) <= vset:
                raise InputError(f"face {f} uses unknown vertices")
        # drop faces contained in others; keep isolated vertices as singletons
        covered = set()
        for f in faces:
            covered |= set(f)
        for v in sorted(vset - covered, key=_key):
            faces.append((v,))
        faces = sorted(set(faces), key=lambda f: (len(f), f))
        self.maximal_faces = [
            f for f in faces if not any(set(f) < set(g) for g in faces if g != f)
        ]

    @property
    def dim(self):
        if not self.maximal_faces:
            return -1
        return max(len(f) for f in self.maximal_faces) - 1

    def faces(self):
        """All nonempty faces (downward closure), sorted."""
        out = set()
        for f in self.maximal_faces:
            for k in range(1, len(f) + 1):
                out.update(combinations(f, k))
        return sorted(out, key=lambda f: (len(f), f))

    def has_face(self, f):
        f = set(f)
        return any(f <= set(g) for g in self.maximal_faces)

    def edges(self):
        return [f for f in self.faces() if len(f) == 2]

    def skeleton_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges())
        return g

    def is_simplex(self):
        """True iff the complex is a single full simplex on its vertices."""
        return len(self.maximal_faces) == 1 and set(self.maximal_faces[0]) == set(
            self.vertices
        )

    def to_json(self):
        return {
            "vertices": [str(v) for v in self.vertices],
            "maximal_faces": [[str(v) for v in f] for f in self.maximal_faces],
        }


def _key(v):
    return (0, v) if isinstance(v, int) else (1, str(v))


def clique_complex(graph: nx.Graph) -> SimplicialComplex:
    """Flag complex of a graph: maximal faces are the maximal cliques."""
    cliques = sorted(
        (tuple(sorted(c, key=_key)) for c in nx.find_cliques(graph)),
        key=lambda f: (len(f), f),
    )
    return SimplicialComplex(vertices=sorted(graph.nodes, key=_key), maximal_faces=cliques)


def barycentric_subdivision(complex_: SimplicialComplex) -> SimplicialComplex:
    """N': vertices are the nonempty faces of N, simplices are chains of faces."""
    faces = complex_.faces()
    index = {f: i for i, f in enumerate(faces)}
    # chains ordered by inclusion; maximal chains suffice as maximal faces
    g = nx.DiGraph()
    g.add_nodes_from(range(len(faces)))
    for a in faces:
        for b in faces:
            if a != b and set(a) < set(b):
                g.add_edge(index[a], index[b])
    maximal_chains = []

    def grow(chain, last):
        extensions = sorted(g.successors(last))
        if not extensions:
            maximal_chains.append(tuple(chain))
            return
        for nxt in extensions:
            grow(chain + [nxt], nxt)

    for start in sorted(g.nodes):
        if g.in_degree(start) == 0:
            grow([start], start)
    return SimplicialComplex(vertices=list(range(len(faces))), maximal_faces=maximal_chains)


def cone(complex_: SimplicialComplex, apex):
    """Cone over a complex: every maximal face gains the apex vertex."""
    if apex in complex_.vertices:
        raise InputError("apex must be a fresh vertex")
    faces = [tuple(list(f) + [apex]) for f in complex_.maximal_faces] or [(apex,)]
    return SimplicialComplex(vertices=list(complex_.vertices) + [apex], maximal_faces=faces)
