"""Word-metric engines: finite groups by multiplication table, right-angled
Coxeter groups by confluent rewriting, and Cayley-ball enumeration.

Engines share a small informal protocol: `identity`, `gen_count`,
`gen_names`, `mul_gen(x, i)`, `norm(x)`, `inverse(x)`, `multiply(x, y)`,
`word_str(x)`.  Elements are hashable opaque values (ints for table groups,
letter tuples for Coxeter groups).  All enumeration orders are fixed by the
generator order, so balls and everything derived from them are reproducible
bit for bit.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InputError, OutOfBallError, ResourceCapError, UnsupportedBackendError
from .metric import GraphMetric

DEFAULT_BALL_CAP = 2_000_000


class FiniteTableGroup:
    """Finite group given by a multiplication table.

    `table[i][j]` is the product of elements i and j; element 0 need not be
    the identity (it is detected).  Generators default to all non-identity
    elements, making the group a diameter-1 metric space.
    """

    def __init__(self, table, names=None, generators=None):
        table = [list(row) for row in table]
        n = len(table)
        if any(len(row) != n for row in table):
            raise InputError("multiplication table must be square")
        self.table = table
        self.size = n
        self.names = [str(x) for x in (names or range(n))]
        if len(self.names) != n:
            raise InputError("one name per element required")
        self._validate()
        if generators is None:
            generators = [g for g in range(n) if g != self.identity]
        self.generators = list(generators)
        if not self.generators and n > 1:
            raise InputError("generating set must be non-empty")
        gen_set = set(self.generators)
        for g in self.generators:
            if self.inv[g] not in gen_set:
                raise InputError("generating set must be symmetric")
        if not self._generates():
            raise InputError("given set does not generate the group")
        self.gen_count = len(self.generators)
        self.gen_names = [self.names[g] for g in self.generators]
        self._norms = self._bfs_norms()

    def _validate(self):
        n = self.size
        for row in self.table:
            if sorted(row) != list(range(n)):
                raise InputError("table rows must be permutations")
        for j in range(n):
            if sorted(self.table[i][j] for i in range(n)) != list(range(n)):
                raise InputError("table columns must be permutations")
        identity = None
        for e in range(n):
            if all(self.table[e][x] == x and self.table[x][e] == x for x in range(n)):
                identity = e
                break
        if identity is None:
            raise InputError("table has no identity element")
        self.identity = identity
        self.inv = [None] * n
        for x in range(n):
            for y in range(n):
                if self.table[x][y] == identity:
                    self.inv[x] = y
                    break
            if self.inv[x] is None:
                raise InputError(f"element {x} has no inverse")
        if n <= 32:
            rng = range(n)
            for a in rng:
                for b in rng:
                    for c in rng:
                        if (
                            self.table[self.table[a][b]][c]
                            != self.table[a][self.table[b][c]]
                        ):
                            raise InputError("table is not associative")

    def _generates(self):
        seen = {self.identity}
        frontier = [self.identity]
        while frontier:
            x = frontier.pop()
            for g in self.generators:
                y = self.table[x][g]
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        return len(seen) == self.size

    def _bfs_norms(self):
        norms = [-1] * self.size
        norms[self.identity] = 0
        q = deque([self.identity])
        while q:
            x = q.popleft()
            for g in self.generators:
                y = self.table[x][g]
                if norms[y] < 0:
                    norms[y] = norms[x] + 1
                    q.append(y)
        return norms

    def mul_gen(self, x, gi):
        return self.table[x][self.generators[gi]]

    def multiply(self, x, y):
        return self.table[x][y]

    def inverse(self, x):
        return self.inv[x]

    def norm(self, x):
        return self._norms[x]

    def distance(self, x, y):
        return self._norms[self.table[self.inv[x]][y]]

    def normal_form(self, word):
        """Fold a generator-index word into an element."""
        x = self.identity
        for gi in word:
            x = self.mul_gen(x, gi)
        return x

    def word_str(self, x):
        return self.names[x]

    @property
    def diameter(self):
        return max(self._norms)

    def elements(self):
        return range(self.size)


def cyclic_table(n):
    """Multiplication table of Z_n with names e, g, g2, ..."""
    table = [[(i + j) % n for j in range(n)] for i in range(n)]
    names = ["e"] + [f"g{i}" if i > 1 else "g" for i in range(1, n)]
    return table, names


class RacgEngine:
    """Right-angled Coxeter group by rewriting to the ShortLex-least reduced
    word.

    Letters are generator indices.  A word is reduced iff it has no pair of
    equal letters separated only by letters commuting with them; reduced
    words of one element form a single commutation class, and the engine
    stores its lexicographically least member, so normal forms are unique
    and their length is the word-metric norm.
    """

    def __init__(self, matrix, names=None):
        m = [list(row) for row in matrix]
        k = len(m)
        if any(len(row) != k for row in m):
            raise InputError("Coxeter matrix must be square")
        for i in range(k):
            if m[i][i] != 1:
                raise InputError("Coxeter matrix needs 1s on the diagonal")
            for j in range(k):
                if m[i][j] != m[j][i]:
                    raise InputError("Coxeter matrix must be symmetric")
                if i != j and m[i][j] not in (0, 2):
                    raise UnsupportedBackendError(
                        "only right-angled matrices supported "
                        f"(entry m[{i}][{j}]={m[i][j]}; use 2 or 0 for infinity)"
                    )
        self.matrix = m
        self.rank = k
        self.names = [str(x) for x in (names or (chr(ord("a") + i) for i in range(k)))]
        if len(self.names) != k:
            raise InputError("one name per generator required")
        self.comm = [
            frozenset(j for j in range(k) if j != i and m[i][j] == 2) for i in range(k)
        ]
        self.identity = ()
        self.generators = list(range(k))
        self.gen_count = k
        self.gen_names = list(self.names)

    def append(self, word, g):
        """Normal form of word * g, for `word` already in normal form."""
        comm_g = self.comm[g]
        n = len(word)
        i = n - 1
        while i >= 0:
            x = word[i]
            if x == g:
                shorter = word[:i] + word[i + 1 :]
                return self._relex_after_deletion(shorter, i)
            if x not in comm_g:
                break
            i -= 1
        # no cancellation: insert g into the commuting suffix, before the
        # first letter there that is larger than g
        pos = i + 1
        while pos < n and word[pos] < g:
            pos += 1
        return word[:pos] + (g,) + word[pos:]

    def _relex_after_deletion(self, word, start):
        # deletion keeps the word reduced; re-establish lex-least order by
        # re-inserting the tail letters (each insertion is the append step
        # without cancellation, which cannot occur in a reduced word)
        if start >= len(word):
            return word
        out = word[:start]
        for g in word[start:]:
            comm_g = self.comm[g]
            i = len(out) - 1
            while i >= 0 and out[i] in comm_g:
                i -= 1
            pos = i + 1
            while pos < len(out) and out[pos] < g:
                pos += 1
            out = out[:pos] + (g,) + out[pos:]
        return out

    def mul_gen(self, x, gi):
        return self.append(x, gi)

    def normal_form(self, word):
        x = self.identity
        for g in word:
            if not (0 <= g < self.rank):
                raise InputError(f"unknown generator index {g}")
            x = self.append(x, g)
        return x

    def multiply(self, x, y):
        out = x
        for g in y:
            out = self.append(out, g)
        return out

    def inverse(self, x):
        return self.normal_form(tuple(reversed(x)))

    def norm(self, x):
        return len(x)

    def distance(self, x, y):
        return len(self.multiply(self.inverse(x), y))

    def word_str(self, x):
        return ".".join(self.names[g] for g in x) if x else "e"

    def parse_word(self, text):
        if text in ("", "e"):
            return ()
        idx = {n: i for i, n in enumerate(self.names)}
        try:
            return tuple(idx[t] for t in text.replace(".", " ").split())
        except KeyError as exc:
            raise InputError(f"unknown generator name {exc.args[0]!r}") from exc

    # parabolic subgroup helpers -------------------------------------------

    def support(self, x):
        return frozenset(x)

    def in_parabolic(self, x, letters):
        return self.support(x) <= frozenset(letters)

    def coset_minrep(self, x, letters):
        """Minimal-length representative of the left coset x * Gamma_W."""
        letters = sorted(letters)
        while True:
            for s in letters:
                y = self.append(x, s)
                if len(y) < len(x):
                    x = y
                    break
            else:
                return x

    def dist_to_parabolic(self, x, letters):
        """d(x, Gamma_W) = length of the minimal element of x^{-1} Gamma_W."""
        return len(self.coset_minrep(self.inverse(x), letters))

    def sub_engine(self, letters):
        """Engine of the parabolic subgroup on a letter subset (re-indexed)."""
        letters = sorted(letters)
        sub = [[self.matrix[i][j] for j in letters] for i in letters]
        return (
            RacgEngine(sub, names=[self.names[i] for i in letters]),
            letters,
        )


@dataclass
class Ball:
    """Closed Cayley ball around the identity with BFS ids and edges."""

    engine: object
    radius: int
    elements: list
    index: dict
    norms: np.ndarray
    edge_src: np.ndarray
    edge_gen: np.ndarray
    edge_dst: np.ndarray

    def __len__(self):
        return len(self.elements)

    def id_of(self, x):
        try:
            return self.index[x]
        except KeyError:
            raise OutOfBallError(
                f"element {self.engine.word_str(x)} outside enumerated ball of radius {self.radius}"
            ) from None

    def sphere(self, k):
        return [i for i in range(len(self.elements)) if self.norms[i] == k]

    def core_ids(self, core_radius):
        return [i for i in range(len(self.elements)) if self.norms[i] <= core_radius]

    def graph_metric(self) -> GraphMetric:
        inside = self.edge_dst >= 0
        return GraphMetric(
            len(self.elements),
            zip(self.edge_src[inside].tolist(), self.edge_dst[inside].tolist()),
        )

    def cayley_edges(self):
        """Distinct undirected Cayley edges inside the ball."""
        inside = self.edge_dst >= 0
        pairs = {
            (min(u, v), max(u, v))
            for u, v in zip(self.edge_src[inside].tolist(), self.edge_dst[inside].tolist())
            if u != v
        }
        return sorted(pairs)

    def to_json(self):
        inside = self.edge_dst >= 0
        return {
            "radius": int(self.radius),
            "elements": [
                {
                    "id": i,
                    "word": self.engine.word_str(x),
                    "norm": int(self.norms[i]),
                }
                for i, x in enumerate(self.elements)
            ],
            "edges": [
                [int(u), int(v), self.engine.gen_names[g]]
                for u, g, v in zip(
                    self.edge_src[inside].tolist(),
                    self.edge_gen[inside].tolist(),
                    self.edge_dst[inside].tolist(),
                )
                if u <= v
            ],
        }


def build_ball(engine, radius, cap=DEFAULT_BALL_CAP) -> Ball:
    """BFS enumeration of the closed ball; ids follow discovery order."""
    if radius < 0:
        raise InputError("ball radius must be >= 0")
    identity = engine.identity
    elements = [identity]
    index = {identity: 0}
    norms = [0]
    edges = []
    frontier = deque([0])
    while frontier:
        xid = frontier.popleft()
        if norms[xid] >= radius:
            continue
        x = elements[xid]
        for gi in range(engine.gen_count):
            y = engine.mul_gen(x, gi)
            yid = index.get(y)
            if yid is None:
                yid = len(elements)
                if yid >= cap:
                    raise ResourceCapError(
                        f"ball would exceed the element cap {cap}", cap=cap
                    )
                index[y] = yid
                elements.append(y)
                norms.append(norms[xid] + 1)
                frontier.append(yid)
            edges.append((xid, gi, yid))
    # boundary-sphere elements may have generator edges leaving the ball;
    # record them with dst = -1 so callers can tell truncation from absence
    boundary = [i for i in range(len(elements)) if norms[i] == radius]
    for xid in boundary:
        x = elements[xid]
        for gi in range(engine.gen_count):
            y = engine.mul_gen(x, gi)
            yid = index.get(y, -1)
            edges.append((xid, gi, yid))
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 3)
    ball = Ball(
        engine=engine,
        radius=radius,
        elements=elements,
        index=index,
        norms=np.asarray(norms, dtype=np.int32),
        edge_src=arr[:, 0],
        edge_gen=arr[:, 1],
        edge_dst=arr[:, 2],
    )
    return ball


def enumerate_words_brute(engine, radius):
    """Independent oracle: normalize every generator string of length <= radius.

    Exponential; only for cross-checking small balls in tests.
    """
    seen = {engine.identity}
    layer = [engine.identity]
    for _ in range(radius):
        nxt = []
        for x in layer:
            for gi in range(engine.gen_count):
                y = engine.mul_gen(x, gi)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        layer = nxt
    return seen
