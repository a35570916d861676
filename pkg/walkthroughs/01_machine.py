"""Running programs on the frame-stack machine.

Walks through a small evaluation step by step, shows how a frame stack
observes a value, and certifies that Ω diverges.
"""
from mlq.machine import (
    Configuration, detect_divergence, eval, terminates_k, trace, validate_cycle,
)
from mlq.equivalence import outcome_to_json as show
from mlq.surface import parse_expr, parse_framestack, pretty, pretty_stack
from mlq.syntax import OMEGA

# Every configuration is a stack paired with the expression in focus.
prog = parse_expr("let X = 41 in X + 1")
for n, c in trace(prog):
    print(f"{n:2}  ⟨{pretty_stack(c.stack) or 'Id'}, {pretty(c.expr)}⟩")
print("result:", show(eval(prog)))

# The inductive termination relation agrees with the machine's step count.
c = Configuration((), prog)
print("terminates in exactly 5 steps:", terminates_k(c, 5), "| in 4:", terminates_k(c, 4))

# A stack is a continuation.  This one inspects the value and either
# returns 0 or loops forever.
k = parse_framestack("case □ of 1 then 0 else apply (fun f/0() -> apply f/0())()")
print("1 under k:", show(eval(parse_expr("1"), k)))
print("2 under k:", show(eval(parse_expr("2"), k, fuel=20)))

# Running out of fuel proves nothing.  A repeated configuration does.
cert = detect_divergence(Configuration(k, parse_expr("2")))
print("certificate:", cert.prefix, "steps to the loop, period", cert.period)
print("replays:", validate_cycle(Configuration(k, parse_expr("2")), cert.prefix, cert.period))
print("Ω alone:", show(detect_divergence(Configuration((), OMEGA))))
