import random

import pytest

from exteq.automata import (
    FSA,
    MonoidMorphism,
    enumerate_language,
    inverse_morphism,
    is_empty,
    language_equal,
    minimize,
    product,
    reroot,
    restrict_accepting,
    reverse,
    words_up_to,
)
from exteq.errors import AlphabetMismatch, UnknownState
from exteq.words import Alphabet

AB = Alphabet.from_generators(["a"])  # letters a, A


def parity_dfa():
    # accepts words of even length over {a, A}
    return FSA(AB, ((1, 1), (0, 0)), 0, frozenset([0]))


def random_dfa(rng, alphabet, n_states=5):
    rows = tuple(
        tuple(rng.randrange(n_states) for _ in alphabet.letters)
        for _ in range(n_states)
    )
    accepting = frozenset(
        s for s in range(n_states) if rng.random() < 0.4
    )
    return FSA(alphabet, rows, rng.randrange(n_states), accepting)


def lang(M, maxlen):
    return set(enumerate_language(M, maxlen))


def test_run_and_accepts():
    M = parity_dfa()
    assert M.run("") == M.initial
    assert M.accepts("aa") and not M.accepts("a")
    for w in words_up_to(AB, 5):
        assert M.accepts(w) == (M.run(w) in M.accepting)
    with pytest.raises(AlphabetMismatch):
        M.accepts("b")


def test_enumerate_small():
    got = enumerate_language(parity_dfa(), 4)
    assert got[0] == ""
    assert set(got) == {w for w in words_up_to(AB, 4) if len(w) % 2 == 0}


def test_product_single_and_intersection():
    rng = random.Random(20)
    for _ in range(40):
        M1 = random_dfa(rng, AB)
        M2 = random_dfa(rng, AB)
        single, _ = product([M1], lambda t: t[0] in M1.accepting)
        assert lang(single, 6) == lang(M1, 6)
        inter, _ = product(
            [M1, M2], lambda t: t[0] in M1.accepting and t[1] in M2.accepting
        )
        assert lang(inter, 6) == lang(M1, 6) & lang(M2, 6)
        union, _ = product(
            [M1, M2], lambda t: t[0] in M1.accepting or t[1] in M2.accepting
        )
        assert lang(union, 6) == lang(M1, 6) | lang(M2, 6)


def test_reroot_restrict():
    M = parity_dfa()
    assert lang(reroot(M, M.initial), 5) == lang(M, 5)
    assert lang(restrict_accepting(M, M.accepting), 5) == lang(M, 5)
    assert lang(reroot(M, 1), 3) == {w for w in words_up_to(AB, 3) if len(w) % 2 == 1}
    with pytest.raises(UnknownState):
        reroot(M, 7)


def test_branches_partition_language():
    # the single-accepting-state branches of a DFA partition its language
    rng = random.Random(21)
    for _ in range(20):
        M = random_dfa(rng, AB)
        branches = [restrict_accepting(M, [s]) for s in M.accepting]
        full = lang(M, 8)
        parts = [lang(B, 8) for B in branches]
        union_all = set().union(*parts) if parts else set()
        assert union_all == full
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                assert not (parts[i] & parts[j])


def test_reverse():
    alpha = Alphabet.from_generators(["a", "b"])
    # language {ab}
    sink = 3
    rows = [[1, sink, sink, sink], [sink, sink, 2, sink], [sink] * 4, [sink] * 4]
    M = FSA(alpha, tuple(tuple(r) for r in rows), 0, frozenset([2]))
    R = reverse(M)
    assert lang(R, 3) == {"ba"}
    rng = random.Random(22)
    for _ in range(30):
        M = random_dfa(rng, AB)
        R = reverse(M)
        assert lang(R, 6) == {w[::-1] for w in lang(M, 6)}
        assert lang(reverse(R), 6) == lang(M, 6)


def test_inverse_morphism():
    alpha = Alphabet.from_generators(["a", "b"])
    ident = MonoidMorphism.identity(alpha)
    rng = random.Random(23)
    for _ in range(20):
        M = random_dfa(rng, alpha)
        assert lang(inverse_morphism(M, ident), 5) == lang(M, 5)
    # phi mapping everything to the empty word
    eps = MonoidMorphism(alpha, alpha, {x: "" for x in alpha.letters})
    M = random_dfa(rng, alpha)
    pre = inverse_morphism(M, eps)
    expect = set(words_up_to(alpha, 4)) if M.accepts("") else set()
    assert lang(pre, 4) == expect
    # random short images, definitional oracle
    for _ in range(20):
        M = random_dfa(rng, alpha)
        image = {}
        for g in ("a", "b"):
            w = "".join(rng.choice(alpha.letters) for _ in range(rng.randrange(4)))
            image[g] = w
            image[g.upper()] = alpha.inverse_word(w)
        phi = MonoidMorphism(alpha, alpha, image)
        pre = inverse_morphism(M, phi)
        for w in words_up_to(alpha, 5):
            assert pre.accepts(w) == M.accepts(phi(w))


def test_minimize():
    rng = random.Random(24)
    for _ in range(40):
        M = random_dfa(rng, AB)
        m = minimize(M)
        assert lang(m, 8) == lang(M, 8)
        assert minimize(m) == m
        assert m.n_states <= M.n_states


def test_minimize_canonical_across_isomorphs():
    M = parity_dfa()
    # same language with redundant states
    rows = ((1, 2), (0, 0), (0, 0))
    M2 = FSA(AB, rows, 0, frozenset([0]))
    assert minimize(M) == minimize(M2)


def test_is_empty_and_language_equal():
    none = FSA(AB, ((0, 0),), 0, frozenset())
    assert is_empty(none)
    assert not is_empty(parity_dfa())
    assert language_equal(parity_dfa(), FSA(AB, ((1, 1), (0, 0)), 0, frozenset([0])))
    assert not language_equal(parity_dfa(), none)
