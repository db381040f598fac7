"""Synthesis and validation of the pipeline's input automata.

The pipeline consumes a regular language L of quasi-geodesic words and,
per letter x and cocycle value a, predictor automata that recognize the
L-words w with sigma(w, x) = a (three kinds: for sigma_q(w,x), for
sigma_rho(w,x), and a reversed kind for sigma_rho(x, w^-1) consumed by
the parity construction on a letter-inverted tape).

Synthesis is conjectural by design: states are finite signatures (local
windows of normal forms, or longest relator-fragment matches) that are
hypothesized to determine membership and the predicted value.  Every
built automaton is validated exhaustively against direct cocycle
evaluation on all words up to a strictly larger radius and rejected on
any mismatch; the validated radius is recorded on the artifact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .abelian import FGAElement
from .errors import (
    ResourceBound,
    SynthesisInconsistent,
    ValueSetUnstable,
)
from .automata import FSA
from .extension import CentralExtension, sigma_q, sigma_rho
from .words import (
    CayleyBall,
    Presentation,
    QGConstants,
    Word,
    build_ball,
    is_quasigeodesic,
    normal_form,
    state_cap,
)

Q_LEFT = "q-left"
RHO_LEFT = "rho-left"
RHO_RIGHT_REVERSED = "rho-right-reversed"

KINDS = (Q_LEFT, RHO_LEFT, RHO_RIGHT_REVERSED)

_DEAD = "!"


class _TailScheme:
    """Signature machinery for L = words whose every suffix s satisfies
    |s| - d(s) <= nu, with normal-form windows of a fixed width as the
    locality conjecture.

    The membership signature keeps, per class of suffixes sharing a
    window, the worst deficiency; the value signatures are the trailing
    (resp. leading) window of the running normal form.  When the window
    is at least the group's diameter the proxies are exact.
    """

    def __init__(self, p: Presentation, nu: int, window: int):
        self.p = p
        self.nu = nu
        self.window = window
        self.lam = Fraction(1)

    def _nf(self, w: Word) -> Word:
        return normal_form(self.p, w)

    def lsig_initial(self):
        return frozenset()

    def lsig_step(self, sig, x: str):
        if sig == _DEAD:
            return _DEAD
        out = {}
        for d, proxy in sig:
            nxt = self._nf(proxy + x)
            delta = len(nxt) - len(proxy)
            d2 = d + 1 - delta
            if d2 > self.nu:
                return _DEAD
            proxy2 = nxt[-self.window :] if self.window else ""
            if out.get(proxy2, -1) < d2:
                out[proxy2] = d2
        nx = self._nf(x)
        d_new = 1 - len(nx)
        if d_new > self.nu:
            return _DEAD
        pr_new = nx[-self.window :] if self.window else ""
        if out.get(pr_new, -1) < d_new:
            out[pr_new] = d_new
        return frozenset((d, pr) for pr, d in out.items())

    def vsig_initial(self):
        return ""

    def vsig_step(self, sig, x: str):
        nxt = self._nf(sig + x)
        return nxt[-self.window :] if self.window else ""

    def rsig_initial(self):
        return ""

    def rsig_step(self, sig, z: str):
        nxt = self._nf(z + sig)
        return nxt[: self.window] if self.window else ""


class _MatchScheme:
    """Signature machinery for L = geodesic words of a presentation whose
    geodesics are conjectured to be exactly the freely reduced words
    avoiding over-half relator fragments (dense small cancellation).

    The membership/value signature is the longest suffix of the word that
    is a prefix of a cyclic rotation of a (possibly inverted) relator;
    the reversed value signature mirrors this at the front.
    """

    def __init__(self, p: Presentation):
        self.p = p
        self.nu = 0
        self.lam = Fraction(1)
        prefixes = set()
        suffixes = set()
        forbidden_pref = set()
        forbidden_suf = set()
        for r in p.relators:
            half = len(r) // 2
            for base in (r, p.alphabet.inverse_word(r)):
                for j in range(len(base)):
                    c = base[j:] + base[:j]
                    for cut in range(1, len(c) + 1):
                        prefixes.add(c[:cut])
                        suffixes.add(c[-cut:])
                        if cut > half:
                            forbidden_pref.add(c[:cut])
                            forbidden_suf.add(c[-cut:])
        self._prefixes = prefixes
        self._suffixes = suffixes
        # a match is fatal if any of its suffixes (resp. prefixes) is an
        # over-half fragment
        self._bad_pref = {
            u
            for u in prefixes
            if any(u[i:] in forbidden_pref for i in range(len(u)))
        }
        self._bad_suf = {
            u
            for u in suffixes
            if any(u[: len(u) - i] in forbidden_suf for i in range(len(u)))
        }

    def lsig_initial(self):
        return ""

    def lsig_step(self, sig, x: str):
        if sig == _DEAD:
            return _DEAD
        if sig and x == self.p.alphabet.inverse[sig[-1]]:
            return _DEAD
        cand = sig + x
        while cand and cand not in self._prefixes:
            cand = cand[1:]
        if not cand or cand in self._bad_pref:
            return _DEAD
        return cand

    # the membership signature doubles as the forward value signature
    def vsig_initial(self):
        return ""

    def vsig_step(self, sig, x: str):
        cand = sig + x
        while cand and cand not in self._prefixes:
            cand = cand[1:]
        return cand

    def rsig_initial(self):
        return ""

    def rsig_step(self, sig, z: str):
        cand = z + sig
        while cand and cand not in self._suffixes:
            cand = cand[:-1]
        return cand


@dataclass(frozen=True)
class LanguageSpec:
    """Choice of the quasi-geodesic language L and its locality signature.

    window=None selects the relator-fragment signature (nu must be 0);
    otherwise the normal-form-window signature of the given width is used.
    """

    presentation: Presentation
    nu: int = 0
    window: Optional[int] = 2

    def __post_init__(self):
        if self.window is None and self.nu != 0:
            raise ValueError("relator-fragment signatures require nu = 0")
        if self.nu < 0 or (self.window is not None and self.window < 1):
            raise ValueError("need nu >= 0 and window >= 1")
        object.__setattr__(self, "_scheme_cache", [])

    @property
    def lam(self) -> Fraction:
        return Fraction(1)

    def scheme(self):
        if not self._scheme_cache:
            if self.window is None:
                self._scheme_cache.append(_MatchScheme(self.presentation))
            else:
                self._scheme_cache.append(
                    _TailScheme(self.presentation, self.nu, self.window)
                )
        return self._scheme_cache[0]

    def qg_constants(self) -> QGConstants:
        return QGConstants(lam=self.lam, nu=Fraction(self.nu))


@dataclass(frozen=True)
class ValidationReport:
    radius: int
    mismatches: tuple

    @property
    def passed(self) -> bool:
        return not self.mismatches


@dataclass
class PredictorFamily:
    """A family of predictor automata sharing one transition graph.

    graph's accepting set marks the live (L-member) states; values[x][s]
    is the predicted cocycle value at live state s against letter x.  For
    the reversed kind the graph reads the letter-inverted tape fed by the
    parity construction.
    """

    kind: str
    ext: CentralExtension
    lspec: LanguageSpec
    graph: FSA
    values: dict[str, tuple[Optional[FGAElement], ...]]
    value_sets: dict[str, tuple[FGAElement, ...]]
    reps: tuple[Word, ...]
    validated_radius: int = 0

    @property
    def live(self):
        return self.graph.accepting

    def automaton(self, x: str, a: FGAElement) -> FSA:
        if a not in self.value_sets[x]:
            raise KeyError(f"value {a} not observed for letter {x!r}")
        acc = frozenset(
            s for s in self.live if self.values[x][s] == a
        )
        return FSA(self.graph.alphabet, self.graph.transitions, self.graph.initial, acc)

    @property
    def automata(self) -> dict:
        return {
            (x, a): self.automaton(x, a)
            for x in self.graph.alphabet.letters
            for a in self.value_sets[x]
        }


def _synthesize_graph(lspec: LanguageSpec, kind: Optional[str], cap: Optional[int]):
    """BFS over signatures; returns (FSA with live accepting, reps)."""
    p = lspec.presentation
    scheme = lspec.scheme()
    alpha = p.alphabet
    cap = cap if cap is not None else state_cap()

    if kind is None or kind in (Q_LEFT, RHO_LEFT):
        if isinstance(scheme, _MatchScheme) or kind is None:
            start = (scheme.lsig_initial(),)
        else:
            start = (scheme.lsig_initial(), scheme.vsig_initial())
    else:
        start = (scheme.lsig_initial(), scheme.rsig_initial())

    def step(state, letter):
        if state is None:
            return None
        if kind == RHO_RIGHT_REVERSED:
            lsig, rsig = state
            # tape letters are inverted; the underlying L-word letter is
            # the inverse of what the tape carries
            l2 = scheme.lsig_step(lsig, alpha.inverse[letter])
            if l2 == _DEAD:
                return None
            return (l2, scheme.rsig_step(rsig, letter))
        if len(state) == 1:
            l2 = scheme.lsig_step(state[0], letter)
            return None if l2 == _DEAD else (l2,)
        lsig, vsig = state
        l2 = scheme.lsig_step(lsig, letter)
        if l2 == _DEAD:
            return None
        return (l2, scheme.vsig_step(vsig, letter))

    index = {start: 0, None: 1}
    states = [start, None]
    reps = ["", ""]
    rows: list[list[int]] = []
    queue = [0]
    head = 0
    while head < len(queue):
        i = queue[head]
        head += 1
        while len(rows) <= i:
            rows.append([])
        cur = states[i]
        row = []
        for x in alpha.letters:
            nxt = step(cur, x)
            j = index.get(nxt)
            if j is None:
                if len(states) >= cap:
                    raise ResourceBound(f"signature space exceeds cap {cap}")
                j = len(states)
                index[nxt] = j
                states.append(nxt)
                reps.append(reps[i] + x)
                queue.append(j)
            row.append(j)
        rows[i] = row
    # the dead sink self-loops
    nletters = len(alpha.letters)
    for i, cur in enumerate(states):
        if cur is None:
            while len(rows) <= i:
                rows.append([])
            rows[i] = [i] * nletters
    live = frozenset(i for i, s in enumerate(states) if s is not None)
    fsa = FSA(alpha, tuple(tuple(r) for r in rows), 0, live)
    return fsa, tuple(reps)


def build_L_automaton(
    p: Presentation,
    lspec: LanguageSpec,
    R_learn: int,
    R_validate: int,
    ball: Optional[CayleyBall] = None,
    cap: Optional[int] = None,
) -> FSA:
    """DFA for the quasi-geodesic language, validated exhaustively.

    R_learn only documents the exploration depth expectation; the
    signature space is always closed.  Validation compares against the
    ball-based quasi-geodesic test on every word of length <= R_validate.
    """
    if lspec.presentation != p:
        raise ValueError("language spec belongs to a different presentation")
    fsa, _ = _synthesize_graph(lspec, None, cap)
    ball = ball or build_ball(p, R_validate)
    report = _validate_L(fsa, lspec, R_validate, ball)
    if not report.passed:
        raise SynthesisInconsistent(
            f"membership mismatch at radius {R_validate}: "
            f"{report.mismatches[0]}",
            report,
        )
    return fsa


def _validate_L(fsa: FSA, lspec: LanguageSpec, R: int, ball: CayleyBall):
    alpha = lspec.presentation.alphabet
    mismatches = []
    frontier = [("", fsa.initial)]
    for _ in range(R + 1):
        nxt = []
        for w, s in frontier:
            expected = is_quasigeodesic(ball, w, lspec.lam, Fraction(lspec.nu))
            got = s in fsa.accepting
            if expected != got:
                mismatches.append((w, expected, got))
            for x in alpha.letters:
                if len(w) < R:
                    nxt.append((w + x, fsa.step(s, x)))
        frontier = nxt
    return ValidationReport(R, tuple(mismatches))


def build_predictor_family(
    ext: CentralExtension,
    kind: str,
    lspec: LanguageSpec,
    R_learn: int,
    R_validate: int,
    ball: Optional[CayleyBall] = None,
    cap: Optional[int] = None,
) -> PredictorFamily:
    """Synthesize and validate the predictor family of the given kind."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if lspec.presentation != ext.base:
        raise ValueError("language spec belongs to a different presentation")
    graph, reps = _synthesize_graph(lspec, kind, cap)
    alpha = ext.base.alphabet
    values: dict[str, list[Optional[FGAElement]]] = {
        x: [None] * graph.n_states for x in alpha.letters
    }
    for s in graph.accepting:
        rep = reps[s]
        for x in alpha.letters:
            values[x][s] = _direct_value(ext, kind, rep, x)
    value_sets = {
        x: tuple(
            sorted(
                {values[x][s] for s in graph.accepting},
                key=lambda a: a.coords(),
            )
        )
        for x in alpha.letters
    }
    fam = PredictorFamily(
        kind=kind,
        ext=ext,
        lspec=lspec,
        graph=graph,
        values={x: tuple(v) for x, v in values.items()},
        value_sets=value_sets,
        reps=reps,
    )
    ball = ball or build_ball(ext.base, R_validate)
    report = validate_family(fam, ext, R_validate, ball)
    if not report.passed:
        first = report.mismatches[0]
        if first[0] == "value":
            _, w, x, expected, got = first
            if expected not in fam.value_sets[x]:
                raise ValueSetUnstable(
                    f"value {expected} of {w!r} against {x!r} "
                    "not observed during synthesis",
                )
        raise SynthesisInconsistent(
            f"{kind} family mismatch at radius {R_validate}: "
            f"{report.mismatches[0]}",
            report,
        )
    fam.validated_radius = R_validate
    return fam


def _direct_value(ext: CentralExtension, kind: str, tape: Word, x: str):
    """Ground-truth cocycle value for the word that reached a state."""
    if kind == Q_LEFT:
        return sigma_q(ext, tape, x)
    if kind == RHO_LEFT:
        return sigma_rho(ext, tape, x)
    # reversed kind: the tape carries inverted letters; the predicted
    # value is sigma_rho(x, g) for g the element of the reversed tape
    return sigma_rho(ext, x, tape[::-1])


def validate_family(
    fam: PredictorFamily, ext: CentralExtension, R: int, ball: Optional[CayleyBall] = None
) -> ValidationReport:
    """Exhaustively compare the family against direct evaluation.

    Checks, for every word w with |w| <= R: membership agreement with the
    quasi-geodesic test, and for members the predicted value against the
    direct cocycle value for every letter.  For the reversed kind the
    membership/value pair is checked on the letter-inverted tape.
    """
    lspec = fam.lspec
    alpha = lspec.presentation.alphabet
    ball = ball or build_ball(lspec.presentation, R)
    mismatches = []
    frontier = [("", "")]  # (L-word w, tape word)
    for _ in range(R + 1):
        nxt = []
        for w, tape in frontier:
            in_L = is_quasigeodesic(ball, w, lspec.lam, Fraction(lspec.nu))
            s = fam.graph.run(tape)
            got_live = s in fam.live
            if in_L != got_live:
                mismatches.append(("membership", w, in_L, got_live))
            elif in_L:
                for x in alpha.letters:
                    expected = _direct_value(ext, fam.kind, tape, x)
                    got = fam.values[x][s]
                    if expected != got:
                        mismatches.append(("value", w, x, expected, got))
            if len(w) < R:
                for x in alpha.letters:
                    t = x if fam.kind != RHO_RIGHT_REVERSED else alpha.inverse[x]
                    nxt.append((w + x, tape + t))
        frontier = nxt
    return ValidationReport(R, tuple(mismatches))
