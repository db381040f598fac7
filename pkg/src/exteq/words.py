"""Words over symmetric alphabets, group presentations and word-problem engines.

Words are plain strings; each letter is one character and the alphabet's
involution gives its formal inverse (by convention uppercase inverts
lowercase, but any fixed-point-free or order-2 pairing is allowed).
Equality in a presented group is decided by a logged rewriting engine:
greedy replacement of over-half relator subwords by their shorter
complements, plus a breadth-first search over equal-length half-relator
swaps for presentations where pure shortening is not confluent.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .errors import (
    AlphabetMismatch,
    BallTooSmall,
    NotSmallCancellation,
    ResourceBound,
)

Word = str

DEFAULT_STATE_CAP = 200_000


def state_cap(default: int = DEFAULT_STATE_CAP) -> int:
    """Global cap on enumerated states/elements, overridable via env var."""
    raw = os.environ.get("EXTEQ_CAP_STATES")
    return int(raw) if raw else default


@dataclass(frozen=True)
class Alphabet:
    """Ordered symmetric alphabet with a formal-inverse involution."""

    letters: tuple[str, ...]
    inverse: dict[str, str] = field(compare=False)

    def __post_init__(self):
        if len(set(self.letters)) != len(self.letters):
            raise ValueError("duplicate letters")
        for x in self.letters:
            if len(x) != 1:
                raise ValueError("letters must be single characters")
            y = self.inverse.get(x)
            if y is None or y not in self.letters:
                raise ValueError(f"involution not defined on {x!r}")
            if self.inverse[y] != x:
                raise ValueError(f"involution not an involution at {x!r}")
        object.__setattr__(
            self, "_order", {x: i for i, x in enumerate(self.letters)}
        )

    @classmethod
    def from_generators(
        cls, generators: Iterable[str], involutive: Iterable[str] = ()
    ) -> "Alphabet":
        """Alphabet with letters g, g^-1 (uppercase) per generator.

        Generators listed in `involutive` are their own inverses and
        contribute a single letter.
        """
        involutive = set(involutive)
        letters: list[str] = []
        inverse: dict[str, str] = {}
        for g in generators:
            if len(g) != 1 or not g.islower():
                raise ValueError(f"generator must be a lowercase letter: {g!r}")
            if g in involutive:
                letters.append(g)
                inverse[g] = g
            else:
                letters.extend([g, g.upper()])
                inverse[g] = g.upper()
                inverse[g.upper()] = g
        return cls(tuple(letters), inverse)

    def index(self, x: str) -> int:
        try:
            return self._order[x]
        except KeyError:
            raise AlphabetMismatch(f"letter {x!r} not in alphabet") from None

    def check_word(self, w: Word) -> Word:
        for x in w:
            if x not in self._order:
                raise AlphabetMismatch(f"letter {x!r} not in alphabet")
        return w

    def inverse_word(self, w: Word) -> Word:
        return "".join(self.inverse[x] for x in reversed(w))

    def shortlex_key(self, w: Word):
        return (len(w), tuple(self._order[x] for x in w))

    def free_reduce(self, w: Word) -> Word:
        """Unique freely reduced word equal to w in the free group."""
        out: list[str] = []
        inv = self.inverse
        for x in w:
            if x not in self._order:
                raise AlphabetMismatch(f"letter {x!r} not in alphabet")
            if out and out[-1] == inv[x]:
                out.pop()
            else:
                out.append(x)
        return "".join(out)

    def is_freely_reduced(self, w: Word) -> bool:
        inv = self.inverse
        return all(w[i + 1] != inv[w[i]] for i in range(len(w) - 1))


def free_reduce(alphabet: Alphabet, w: Word) -> Word:
    return alphabet.free_reduce(w)


def _rotations(w: Word):
    for j in range(len(w)):
        yield w[j:] + w[:j]


# A relator application is recorded as (relator index, sign, position):
# replacing u by v at `position` multiplied the represented kernel element
# by sign * z_relator.
RelatorLog = list[tuple[int, int, int]]


@dataclass(frozen=True)
class Presentation:
    """Group presentation with optional hyperbolicity / small-cancellation
    metadata."""

    alphabet: Alphabet
    relators: tuple[Word, ...]
    delta: Optional[Fraction] = None
    sc_fraction: Optional[Fraction] = None

    def __post_init__(self):
        for r in self.relators:
            self.alphabet.check_word(r)
            if not r:
                raise ValueError("empty relator")
            if not self.alphabet.is_freely_reduced(r):
                raise ValueError(f"relator {r!r} not freely reduced")
            if r[0] == self.alphabet.inverse[r[-1]]:
                raise ValueError(f"relator {r!r} not cyclically reduced")
        object.__setattr__(self, "_tables", None)
        object.__setattr__(self, "_nf_cache", {})

    # -- symmetrized rewrite tables ------------------------------------

    def _build_tables(self):
        """Shortening table (over-half subword -> shorter complement) and
        swap table (exactly-half subword -> equal-length complement),
        both over all cyclic rotations of each relator and its inverse."""
        shorten: dict[str, tuple[str, int, int]] = {}
        swaps: dict[str, list[tuple[str, int, int]]] = {}
        for k, r in enumerate(self.relators):
            for sign, base in ((1, r), (-1, self.alphabet.inverse_word(r))):
                for c in _rotations(base):
                    n = len(c)
                    half = n // 2
                    for cut in range(half, n + 1):
                        u, rest = c[:cut], c[cut:]
                        v = self.alphabet.inverse_word(rest)
                        if len(v) < len(u):
                            shorten.setdefault(u, (v, k, sign))
                        elif len(v) == len(u) and v != u:
                            entry = (v, k, sign)
                            bucket = swaps.setdefault(u, [])
                            if entry not in bucket:
                                bucket.append(entry)
        max_len = max((len(u) for u in shorten), default=0)
        min_len = min((len(u) for u in shorten), default=0)
        tables = (shorten, swaps, max_len, min_len)
        object.__setattr__(self, "_tables", tables)
        return tables

    @property
    def tables(self):
        return self._tables or self._build_tables()


@dataclass(frozen=True)
class SCReport:
    """Result of a small-cancellation check."""

    fraction: Fraction
    longest_piece: int
    violations: tuple[tuple[Word, int, int], ...]  # (piece, relator idx, |r|)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_small_cancellation(p: Presentation, fraction: Fraction) -> SCReport:
    """List every piece u with |u| >= fraction * |relator|.

    A piece is a word occurring as a prefix of the symmetrized relator set
    in at least two distinct ways; rotations of a single relator count as
    distinct occurrences even when the rotated words coincide, so proper
    powers such as a^3 fail as expected.
    """
    occurrences: dict[str, set[tuple[int, int, int]]] = {}
    lengths: dict[str, set[tuple[int, int]]] = {}
    for k, r in enumerate(p.relators):
        for sign, base in ((1, r), (-1, p.alphabet.inverse_word(r))):
            for j, c in enumerate(_rotations(base)):
                for cut in range(1, len(c) + 1):
                    u = c[:cut]
                    occurrences.setdefault(u, set()).add((k, sign, j))
                    lengths.setdefault(u, set()).add((k, len(r)))
    violations = []
    longest = 0
    for u, occ in occurrences.items():
        if len(occ) < 2:
            continue
        longest = max(longest, len(u))
        for k, rlen in sorted(lengths[u]):
            if Fraction(len(u)) >= fraction * rlen:
                violations.append((u, k, rlen))
    violations.sort(key=lambda t: (len(t[0]), t[0], t[1]))
    return SCReport(fraction, longest, tuple(violations))


_SWAP_CLOSURE_CAP = 50_000


def _find_shorten(table, max_len, min_len, w: Word, policy: str):
    positions = range(len(w)) if policy == "leftmost" else range(len(w) - 1, -1, -1)
    for i in positions:
        top = min(max_len, len(w) - i)
        for length in range(top, min_len - 1, -1):
            hit = table.get(w[i : i + length])
            if hit is not None:
                return i, w[i : i + length], hit
    return None


def _reduce_with_log(
    p: Presentation, w: Word, policy: str = "leftmost"
) -> tuple[Word, RelatorLog]:
    """Rewrite w to its canonical shortest form, logging relator uses.

    Strategy: freely reduce; greedily apply shortenings; when stuck,
    breadth-first search the equal-length swap closure for a word that
    admits a shortening.  At the final fixed point every member of the
    closure is shortening-free and the shortlex-least member is returned,
    which makes the result a normal form usable as a section of the group.
    """
    alpha = p.alphabet
    shorten, swaps, max_len, min_len = p.tables
    w = alpha.free_reduce(w)
    log: RelatorLog = []
    while True:
        if shorten:
            hit = _find_shorten(shorten, max_len, min_len, w, policy)
            if hit is not None:
                i, u, (v, k, sign) = hit
                w = alpha.free_reduce(w[:i] + v + w[i + len(u) :])
                log.append((k, sign, i))
                continue
        if not swaps:
            return w, log
        # swap closure at the current length
        visited: dict[Word, RelatorLog] = {w: log}
        queue = [w]
        restart = None
        swap_max = max(len(u) for u in swaps)
        while queue and restart is None:
            cur = queue.pop(0)
            cur_log = visited[cur]
            for i in range(len(cur)):
                top = min(swap_max, len(cur) - i)
                for length in range(top, 0, -1):
                    for v, k, sign in swaps.get(cur[i : i + length], ()):
                        nxt = alpha.free_reduce(cur[:i] + v + cur[i + length :])
                        nlog = cur_log + [(k, sign, i)]
                        if len(nxt) < len(cur):
                            restart = (nxt, nlog)
                            break
                        if nxt not in visited:
                            if len(visited) > _SWAP_CLOSURE_CAP:
                                raise ResourceBound("swap closure too large")
                            visited[nxt] = nlog
                            if shorten:
                                h = _find_shorten(
                                    shorten, max_len, min_len, nxt, policy
                                )
                                if h is not None:
                                    restart = (nxt, nlog)
                                    break
                            queue.append(nxt)
                    if restart:
                        break
                if restart:
                    break
        if restart is not None:
            w, log = restart
            continue
        best = min(visited, key=alpha.shortlex_key)
        return best, visited[best]


def dehn_reduce(
    p: Presentation, w: Word, policy: str = "leftmost", search: Optional[bool] = None
) -> tuple[Word, RelatorLog]:
    """Reduce w, returning the reduced word and the relator-application log.

    With search enabled (the default) the result is the canonical normal
    form; with search=False only greedy shortening runs, which is complete
    for C'(1/6) presentations and rejected otherwise.
    """
    if search is None:
        search = True
    if not search:
        report = check_small_cancellation(p, Fraction(1, 6))
        if not report.passed:
            raise NotSmallCancellation(
                f"presentation is not C'(1/6): piece {report.violations[0][0]!r}"
            )
        alpha = p.alphabet
        shorten, _, max_len, min_len = p.tables
        w = alpha.free_reduce(w)
        log: RelatorLog = []
        while shorten:
            hit = _find_shorten(shorten, max_len, min_len, w, policy)
            if hit is None:
                break
            i, u, (v, k, sign) = hit
            w = alpha.free_reduce(w[:i] + v + w[i + len(u) :])
            log.append((k, sign, i))
        return w, log
    return _reduce_with_log(p, w, policy)


def normal_form_with_log(p: Presentation, w: Word) -> tuple[Word, tuple]:
    cached = p._nf_cache.get(w)
    if cached is None:
        nf, log = _reduce_with_log(p, w)
        cached = (nf, tuple(log))
        p._nf_cache[w] = cached
    return cached


def normal_form(p: Presentation, w: Word) -> Word:
    """Shortlex normal form of w in the presented group."""
    return normal_form_with_log(p, w)[0]


def is_trivial(p: Presentation, w: Word) -> bool:
    return normal_form(p, w) == ""


@dataclass
class CayleyBall:
    """All group elements within a given radius, with shortlex normal forms.

    `edges[i][x]` is the index of element_i * x when that product stays in
    the ball, else None.
    """

    presentation: Presentation
    radius: int
    words: list[Word]
    index: dict[Word, int]
    distances: list[int]
    edges: list[dict[str, Optional[int]]]

    def __len__(self) -> int:
        return len(self.words)

    def walk(self, start: int, w: Word) -> int:
        cur = start
        for x in w:
            nxt = self.edges[cur].get(x)
            if nxt is None:
                raise BallTooSmall(
                    f"walk left the radius-{self.radius} ball at letter {x!r}"
                )
            cur = nxt
        return cur

    def element(self, w: Word) -> int:
        nf = normal_form(self.presentation, w)
        idx = self.index.get(nf)
        if idx is None:
            raise BallTooSmall(f"element of {w!r} outside radius {self.radius}")
        return idx


def build_ball(p: Presentation, R: int, cap: Optional[int] = None) -> CayleyBall:
    """BFS enumeration of the ball of radius R around the identity."""
    cap = cap if cap is not None else state_cap()
    words = [""]
    index = {"": 0}
    distances = [0]
    edges: list[dict[str, Optional[int]]] = [{}]
    frontier = [0]
    for dist in range(1, R + 1):
        nxt_frontier = []
        for i in frontier:
            w = words[i]
            for x in p.alphabet.letters:
                nf = normal_form(p, w + x)
                j = index.get(nf)
                if j is None:
                    if len(words) >= cap:
                        raise ResourceBound(f"ball exceeds cap {cap}")
                    j = len(words)
                    index[nf] = j
                    words.append(nf)
                    distances.append(dist)
                    edges.append({})
                    nxt_frontier.append(j)
                edges[i][x] = j
        frontier = nxt_frontier
    # boundary elements: products may leave the ball
    for i in frontier:
        w = words[i]
        for x in p.alphabet.letters:
            nf = normal_form(p, w + x)
            edges[i][x] = index.get(nf)
    return CayleyBall(p, R, words, index, distances, edges)


@dataclass(frozen=True)
class QGConstants:
    """Quasi-geodesic constants (lam, nu) plus their derivation trail."""

    lam: Fraction
    nu: Fraction
    mu0: Optional[Fraction] = None
    lambda0: Optional[Fraction] = None
    lambda1: Optional[Fraction] = None
    mu1: Optional[Fraction] = None
    m0: Optional[int] = None

    def __post_init__(self):
        if self.lam < 1 or self.nu < 0:
            raise ValueError("need lam >= 1 and nu >= 0")


def derive_qg_constants(
    delta: Fraction,
    m0: int,
    K0: Fraction = Fraction(1),
    K1: Fraction = Fraction(1),
    K2: Fraction = Fraction(1),
    C: Fraction = Fraction(0),
    nu1: Optional[Fraction] = None,
) -> QGConstants:
    """Evaluate the standard constant chain exactly.

    mu0 = 8, lambda0 = 400*delta*m0, mu1 = mu0 + 2 + 2/lambda0,
    lambda1 = lambda0, lam = K0*K1*K2*lambda1, nu = nu1 + C with nu1
    defaulting to mu1.
    """
    delta = Fraction(delta)
    if delta <= 0 or m0 < 1:
        raise ValueError("need delta > 0 and m0 >= 1")
    if any(Fraction(K) < 1 for K in (K0, K1, K2)) or Fraction(C) < 0:
        raise ValueError("need K0, K1, K2 >= 1 and C >= 0")
    mu0 = Fraction(8)
    lambda0 = Fraction(400) * delta * m0
    mu1 = mu0 + 2 + Fraction(2) / lambda0
    lambda1 = lambda0
    lam = Fraction(K0) * Fraction(K1) * Fraction(K2) * lambda1
    if nu1 is None:
        nu1 = mu1
    nu = Fraction(nu1) + Fraction(C)
    return QGConstants(
        lam=lam, nu=nu, mu0=mu0, lambda0=lambda0, lambda1=lambda1, mu1=mu1, m0=m0
    )


def is_quasigeodesic(
    ball: CayleyBall, w: Word, lam: Fraction, nu: Fraction
) -> bool:
    """True iff every subword w' of w satisfies d(1, w') >= |w'|/lam - nu."""
    if lam < 1:
        raise ValueError("lam must be >= 1")
    lam = Fraction(lam)
    nu = Fraction(nu)
    n = len(w)
    if n > ball.radius:
        raise BallTooSmall(
            f"word of length {n} needs a ball of radius >= {n}, have {ball.radius}"
        )
    for i in range(n):
        cur = 0
        for j in range(i + 1, n + 1):
            nxt = ball.edges[cur].get(w[j - 1])
            if nxt is None:
                raise BallTooSmall("subword walk left the ball")
            cur = nxt
            if ball.distances[cur] < Fraction(j - i) / lam - nu:
                return False
    return True
