"""Product automata over the predictor families.

The future predicting automaton (FPA) is the reachable product of the
per-letter, per-value predictor automata; its accepting set T consists of
the product states that pin down, for every letter x, a unique cocycle
value a(s̄, x).  The left/right variants (LFPA/RFPA) do the same for the
section cocycle; the parity predicting automaton (PPA) runs both and
accumulates the parity of sigma_rho(w, w^-1) letter by letter.

Each construction comes with a brute-force harness that re-derives its
key property from direct cocycle evaluation and reports every
counterexample.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .abelian import FGAElement, ParityElement, pa
from .automata import FSA, product, restrict_accepting
from .errors import (
    EmptyBranch,
    Incompatible,
    NotAcceptingState,
    ResourceBound,
    SinkOnPrefix,
)
from .extension import CentralExtension, sigma_q, sigma_rho
from .lrational import (
    Q_LEFT,
    RHO_LEFT,
    RHO_RIGHT_REVERSED,
    PredictorFamily,
)
from .words import Word, state_cap


@dataclass(frozen=True)
class CheckReport:
    radius: int
    counterexamples: tuple

    @property
    def passed(self) -> bool:
        return not self.counterexamples


@dataclass
class FPA:
    """Reachable product of a predictor family with its value readout."""

    fam: PredictorFamily
    product: FSA
    tuples: list[tuple[int, ...]]
    components: tuple[tuple[str, FGAElement, FSA], ...]  # (x, a, M_{x,a})
    T: frozenset[int]

    @property
    def ext(self) -> CentralExtension:
        return self.fam.ext

    def a_of(self, s: int, x: str) -> FGAElement:
        """The unique value a with the (x, a)-component accepting at s."""
        if s not in self.T:
            raise NotAcceptingState(f"state {s} not in T")
        tup = self.tuples[s]
        hits = [
            a
            for i, (xc, a, M) in enumerate(self.components)
            if xc == x and tup[i] in M.accepting
        ]
        if len(hits) != 1:
            raise NotAcceptingState(f"state {s} has {len(hits)} values for {x!r}")
        return hits[0]


def _accepting_tuple(components, letters):
    def is_T(tup):
        for x in letters:
            hits = sum(
                1
                for i, (xc, _, M) in enumerate(components)
                if xc == x and tup[i] in M.accepting
            )
            if hits != 1:
                return False
        return True

    return is_T


def _build_product(fam: PredictorFamily, cap: Optional[int]) -> FPA:
    letters = fam.graph.alphabet.letters
    components = tuple(
        (x, a, fam.automaton(x, a)) for x in letters for a in fam.value_sets[x]
    )
    prod, tuples = product(
        [M for _, _, M in components],
        _accepting_tuple(components, letters),
        cap,
    )
    return FPA(fam, prod, tuples, components, prod.accepting)


def build_fpa(fam: PredictorFamily, cap: Optional[int] = None) -> FPA:
    """Future predicting automaton from a validated q-left family."""
    if fam.kind != Q_LEFT:
        raise ValueError(f"FPA needs a {Q_LEFT} family, got {fam.kind}")
    return _build_product(fam, cap)


def build_lfpa(fam: PredictorFamily, cap: Optional[int] = None) -> FPA:
    if fam.kind != RHO_LEFT:
        raise ValueError(f"LFPA needs a {RHO_LEFT} family, got {fam.kind}")
    return _build_product(fam, cap)


def build_rfpa(fam: PredictorFamily, cap: Optional[int] = None) -> FPA:
    """Right future predicting automaton.

    The component automata read the letter-inverted tape; the composite
    transition feeds each the inverse of the consumed letter, so the
    result reads plain words and its readout at the end of w is
    sigma_rho(x, w^-1).
    """
    if fam.kind != RHO_RIGHT_REVERSED:
        raise ValueError(f"RFPA needs a {RHO_RIGHT_REVERSED} family, got {fam.kind}")
    F = _build_product(fam, cap)
    alpha = F.product.alphabet
    perm = [alpha.index(alpha.inverse[x]) for x in alpha.letters]
    rows = tuple(
        tuple(row[j] for j in perm) for row in F.product.transitions
    )
    flipped = FSA(alpha, rows, F.product.initial, F.product.accepting)
    return FPA(fam, flipped, F.tuples, F.components, F.T)


def fpa_branch(F: FPA, s: int) -> FSA:
    """M(s̄): same automaton with s̄ as the only accepting state."""
    if s not in F.T:
        raise NotAcceptingState(f"state {s} not in T")
    return restrict_accepting(F.product, [s])


def fpa_reroot(F: FPA, s: int) -> FSA:
    """M_{s̄}: same automaton started at s̄."""
    if s not in F.T:
        raise NotAcceptingState(f"state {s} not in T")
    return FSA(F.product.alphabet, F.product.transitions, s, F.product.accepting)


def is_compatible(F: FPA, s: int, v: Word) -> bool:
    return fpa_reroot(F, s).accepts(v)


def shortest_witness(F: FPA, s: int) -> Word:
    """Shortlex-least word reaching s from the initial state."""
    if F.product.initial == s:
        return ""
    seen = {F.product.initial}
    frontier = [("", F.product.initial)]
    while frontier:
        nxt = []
        for w, cur in frontier:
            for x in F.product.alphabet.letters:
                t = F.product.step(cur, x)
                if t == s:
                    return w + x
                if t not in seen:
                    seen.add(t)
                    nxt.append((w + x, t))
        frontier = nxt
    raise EmptyBranch(f"state {s} unreachable")


def sigma_q_of_state(
    F: FPA, s: int, v: Word, route: str = "state", ext: Optional[CentralExtension] = None
) -> FGAElement:
    """sigma_q(s̄, v) = sigma_q(w, v) for any w in L(s̄).

    route "state" accumulates a(cur, x) - a(initial-walk, x) along v using
    only automaton readouts; route "witness" evaluates the cocycle at the
    shortest witness word; route "check" runs both and asserts agreement.
    """
    ext = ext or F.ext
    if s not in F.T:
        raise NotAcceptingState(f"state {s} not in T")
    if not is_compatible(F, s, v):
        raise Incompatible(f"{v!r} is not compatible with state {s}")
    if route in ("witness", "check"):
        w = shortest_witness(F, s)
        witness_value = sigma_q(ext, w, v)
        if route == "witness":
            return witness_value
    acc = ext.pushout_kernel.zero()
    cur, icur = s, F.product.initial
    for x in v:
        acc = acc + F.a_of(cur, x) - F.a_of(icur, x)
        cur = F.product.step(cur, x)
        icur = F.product.step(icur, x)
    if route == "check" and acc != witness_value:
        raise AssertionError(
            f"state route {acc.coords()} != witness route "
            f"{witness_value.coords()} at state {s}, v={v!r}"
        )
    if route not in ("state", "check"):
        raise ValueError(f"unknown route {route!r}")
    return acc


# -- parity predicting automaton ----------------------------------------


@dataclass
class PPA:
    """Composite of LFPA and RFPA with the parity accumulator.

    fsa's states index `states`, whose entries are (LFPA state, RFPA
    state, accumulator) or None for the absorbing sink.
    """

    M1: FPA
    M2: FPA
    ext: CentralExtension
    fsa: FSA
    states: list[Optional[tuple[int, int, ParityElement]]]

    def branch_values(self):
        return sorted(
            {st[2] for i, st in enumerate(self.states) if i in self.fsa.accepting},
            key=lambda p: (p.bits, p.tors),
        )


def build_ppa(
    M1: FPA, M2: FPA, ext: CentralExtension, cap: Optional[int] = None
) -> PPA:
    """Run both predictors in lockstep, accumulating the parity of
    sigma_rho(x, x^-1) - sigma_rho(s̄₁, x) - sigma_rho(x^-1, s̄₂).

    Composite states whose components are not both accepting step to the
    absorbing sink; if such a state is reached while exactly one
    component is accepting the input families disagree about L and the
    construction aborts.
    """
    cap = cap if cap is not None else state_cap()
    alpha = M1.product.alphabet
    if alpha != M2.product.alphabet:
        raise ValueError("LFPA and RFPA over different alphabets")
    sigma_xx = {
        x: pa(sigma_rho(ext, x, alpha.inverse[x])) for x in alpha.letters
    }
    start = (M1.product.initial, M2.product.initial, ParityElement.zero(ext.kernel))
    states: list[Optional[tuple[int, int, ParityElement]]] = [start, None]
    index = {start: 0}
    rows: list[list[int]] = [[], []]
    sink_index = 1
    queue = deque([0])
    while queue:
        i = queue.popleft()
        s1, s2, b = states[i]
        live = s1 in M1.T and s2 in M2.T
        if not live:
            if (s1 in M1.T) != (s2 in M2.T):
                raise SinkOnPrefix(
                    f"predictors disagree about membership at state {i}"
                )
        row = []
        for x in alpha.letters:
            if not live:
                row.append(sink_index)
                continue
            b2 = b + sigma_xx[x] + pa(
                -M1.a_of(s1, x) - M2.a_of(s2, alpha.inverse[x])
            )
            nxt = (M1.product.step(s1, x), M2.product.step(s2, x), b2)
            j = index.get(nxt)
            if j is None:
                if len(states) >= cap:
                    raise ResourceBound(f"parity automaton exceeds cap {cap}")
                j = len(states)
                index[nxt] = j
                states.append(nxt)
                rows.append([])
                queue.append(j)
            row.append(j)
        rows[i] = row
    rows[sink_index] = [sink_index] * len(alpha.letters)
    accepting = frozenset(
        i
        for i, st in enumerate(states)
        if st is not None and st[0] in M1.T and st[1] in M2.T
    )
    fsa = FSA(alpha, tuple(tuple(r) for r in rows), 0, accepting)
    return PPA(M1, M2, ext, fsa, states)


def ppa_branch(D: PPA, d: ParityElement) -> FSA:
    """D(d): accepting states restricted to accumulator value d."""
    keep = [
        i
        for i in D.fsa.accepting
        if D.states[i] is not None and D.states[i][2] == d
    ]
    return restrict_accepting(D.fsa, keep)


# -- brute-force harnesses ----------------------------------------------


def _language_by_state(F: FPA, R: int):
    """All words of length <= R grouped by their end state, L-words only."""
    groups: dict[int, list[Word]] = {}
    frontier = [("", F.product.initial)]
    for _ in range(R + 1):
        nxt = []
        for w, s in frontier:
            if s in F.product.accepting:
                groups.setdefault(s, []).append(w)
            if len(w) < R:
                for x in F.product.alphabet.letters:
                    nxt.append((w + x, F.product.step(s, x)))
        frontier = nxt
    return groups


def check_fpa_key_property(
    F: FPA, R: int, R_v: Optional[int] = None, ext: Optional[CentralExtension] = None
) -> CheckReport:
    """sigma_q(w1, v) = sigma_q(w2, v) for all w1, w2 in the same L(s̄)
    and every compatible v, exhaustively to |w| <= R, |v| <= R_v.

    Also cross-checks the state-route evaluation against the direct
    cocycle value.
    """
    ext = ext or F.ext
    R_v = R if R_v is None else R_v
    counterexamples = []
    groups = _language_by_state(F, R)
    for s, ws in groups.items():
        rerooted = fpa_reroot(F, s)
        vs = [("", s)]
        compatible: list[Word] = []
        for _ in range(R_v + 1):
            nxt = []
            for v, cur in vs:
                if cur in rerooted.accepting:
                    compatible.append(v)
                if len(v) < R_v:
                    for x in F.product.alphabet.letters:
                        nxt.append((v + x, rerooted.step(cur, x)))
            vs = nxt
        baseline = ws[0]
        for v in compatible:
            expect = sigma_q(ext, baseline, v)
            state_value = sigma_q_of_state(F, s, v, ext=ext)
            if state_value != expect:
                counterexamples.append(("state-route", s, baseline, v))
            for w in ws[1:]:
                if sigma_q(ext, w, v) != expect:
                    counterexamples.append(("pair", s, baseline, w, v))
    return CheckReport(R, tuple(counterexamples))


def check_ppa_key_property(
    D: PPA, ext: Optional[CentralExtension] = None, R: int = 6
) -> CheckReport:
    """Pa(sigma_rho(w, w^-1)) equals the accumulator branch of every
    accepted w with |w| <= R; L-prefixes never reach the sink."""
    ext = ext or D.ext
    alpha = D.fsa.alphabet
    counterexamples = []
    frontier = [("", D.fsa.initial)]
    for _ in range(R + 1):
        nxt = []
        for w, s in frontier:
            if s in D.fsa.accepting:
                if D.states[s] is None:
                    counterexamples.append(("sink-accepting", w))
                else:
                    d = D.states[s][2]
                    direct = pa(sigma_rho(ext, w, alpha.inverse_word(w)))
                    if direct != d:
                        counterexamples.append(("branch", w, direct, d))
            if len(w) < R:
                for x in alpha.letters:
                    nxt.append((w + x, D.fsa.step(s, x)))
        frontier = nxt
    return CheckReport(R, tuple(counterexamples))
