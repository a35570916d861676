"""Different characterisations, same answers.

CIU, contextual, logical-relation and discriminator checks are different
definitions of the same equivalence.  Here they judge a handful of pairs,
and then a batch of random pairs, and we count disagreements.
"""
from mlq.equivalence import Budget, ConsistentUpTo, Counterexample, check
from mlq.generators import rng_for, sample_pair
from mlq.surface import parse_expr, pretty

METHODS = ("ciu", "ctx", "logrel", "discriminator")
b = Budget(samples=100)

pairs = [
    ("41 + 1", "let X = 41 in X + 1"),
    ("[1|[2|[]]]", "[1|[3|[]]]"),
    ("fun f/1(X) -> X", "fun f/1(X) -> X + 0"),
    ("1 + []", "apply (fun f/0() -> apply f/0())()"),
]
for lhs, rhs in pairs:
    verdicts = [check(m, parse_expr(lhs), parse_expr(rhs), b).kind for m in METHODS]
    print(f"{lhs:22} vs {rhs:38} {verdicts}")

rng = rng_for(0, "walkthrough")
clash = 0
for _ in range(40):
    a, c = sample_pair(rng)
    vs = [check(m, a, c, b) for m in METHODS]
    refuted = any(isinstance(v, Counterexample) and v.witness.certified for v in vs)
    if refuted and any(isinstance(v, ConsistentUpTo) for v in vs):
        clash += 1
        print("disagreement:", pretty(a), "vs", pretty(c))
print(f"\n40 random pairs, {clash} disagreements")
