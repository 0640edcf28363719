from cama.encoder import compile_nfa
from cama.mapper import place
from cama.regex import compile_regex
from cama.nfa import HomogeneousNfa, StartKind, Ste, SymbolClass


def example_nfa():
    return compile_regex("(a|b)e*cd+")


def placed(nfa, **kw):
    compiled = compile_nfa(nfa)
    return compiled, place(compiled, **kw)


def chain_nfa(n: int, symbols: bytes = b"ab", start=StartKind.START_OF_DATA) -> HomogeneousNfa:
    states = [
        Ste(i, SymbolClass.of([symbols[i % len(symbols)]]) if i % 3 else SymbolClass.of(symbols),
            start if i == 0 else StartKind.NONE, i == n - 1)
        for i in range(n)
    ]
    return HomogeneousNfa(256, states, {i: {i + 1} for i in range(n - 1)})


def random_stats(rng, alphabet_size: int):
    """Random but internally consistent AlphabetStats (cooccur diagonal = freq)."""
    import numpy as np
    from fractions import Fraction
    from cama.encoder import AlphabetStats

    gen = np.random.default_rng(rng.randrange(1 << 30))
    cooccur = gen.integers(0, 5, size=(alphabet_size, alphabet_size))
    cooccur = np.triu(cooccur) + np.triu(cooccur, 1).T
    freq = cooccur.diagonal().copy()
    return AlphabetStats(alphabet_size, Fraction(2), Fraction(2), freq, cooccur)


def random_scheme(rng, kind):
    """A valid scheme of ``kind`` for a random alphabet size."""
    import math
    from cama.encoder import Scheme, SchemeKind, min_two_zero_prefix, multi_zeros_length

    if kind is SchemeKind.ONE_ZERO:
        a = rng.randint(1, 16)
        return a, Scheme(kind, a)
    if kind is SchemeKind.MULTI_ZEROS:
        a = rng.randint(2, 256)
        return a, Scheme(kind, multi_zeros_length(a))
    a = rng.randint(4, 256)
    if kind is SchemeKind.TWO_ZEROS_PREFIX:
        ls = rng.randint(2, math.isqrt(a))
        lp = min_two_zero_prefix(a, ls)
        return a, Scheme(kind, lp + ls, lp, ls)
    side = math.isqrt(a - 1) + 1
    return a, Scheme(kind, 2 * side, side, side)


def random_members(rng, alphabet_size: int):
    """Clustered, sparse, dense or contiguous symbol sets."""
    shape = rng.randrange(4)
    if shape == 0:
        return frozenset(rng.sample(range(alphabet_size), rng.randint(0, min(6, alphabet_size))))
    if shape == 1:
        lo = rng.randrange(alphabet_size)
        return frozenset(range(lo, min(alphabet_size, lo + rng.randint(1, 40))))
    if shape == 2:
        p = rng.random()
        return frozenset(s for s in range(alphabet_size) if rng.random() < p)
    return frozenset(range(alphabet_size)) - frozenset(
        rng.sample(range(alphabet_size), rng.randint(0, min(5, alphabet_size))))
