"""Comparing programs.

The naive check compares final values, so two functions with the same
behaviour but different bodies look different.  CIU equivalence runs both
sides under the same frame stacks and compares termination, and sees
through the difference.
"""
from mlq.equivalence import Budget, check, outcome_to_json as show
from mlq.surface import parse_expr, pretty, pretty_stack
from mlq.syntax import Var

f = parse_expr("fun f/1(X) -> X + 2")
g = parse_expr("fun f/1(X) -> (X + 1) + 1")
print("naive:", check("naive", f, g).kind)
print("ciu:  ", check("ciu", f, g).kind)
print("behav:", check("behav", f, g).kind)

# A refutation comes with a witness.  For 1 and 2 it is the stack that
# returns on 1 and loops on anything else.
v = check("ciu", parse_expr("1"), parse_expr("2"))
w = v.witness
print("\n1 vs 2:", v.kind)
print("  stack:", pretty_stack(w.stack))
print("  lhs:", show(w.lhs))
print("  rhs:", show(w.rhs))

# Open terms are closed by substitutions first.  Addition commutes...
gamma = {Var("E1"), Var("E2")}
print("\nE1+E2 vs E2+E1:", check("ciu", parse_expr("E1 + E2"), parse_expr("E2 + E1"),
                                 gamma=gamma).kind)

# ...but X and X + 0 differ: closing X with a list makes X + 0 stuck.
v = check("ciu", parse_expr("X"), parse_expr("X + 0"), gamma={Var("X")})
print("X vs X+0:", v.kind, "| closing:", {str(k): pretty(i.expr) for k, i in v.witness.closing.items()},
      "| rhs:", v.witness.kind)

# Every verdict is relative to a budget.  Shrinking it can only lose
# refutations, never invent them.
print("\nbudget:", Budget().to_json())
