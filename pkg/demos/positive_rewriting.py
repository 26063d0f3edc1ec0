#!/usr/bin/env python3
"""Without closed predicates the rewriting becomes a positive disjunctive
program; without nominals it does not even need the inequality built-in.
Both modes return the same certain answers.
"""

import omq

KB = """
tbox {
  A <= exists r . B;
  B <= C or D;
  D <= forall r . C;
}
abox { A(a); B(b); r(a, b); }
closed { }
"""

kb = omq.parse_kb(KB)
o = omq.build_omq(kb, omq.parse_query("q(x) :- C(x)."))

stable = omq.rewrite(o)
positive = omq.rewrite_positive(o)
print(f"stable-negation mode:     {len(stable.program.rules)} rules, "
      f"negation used: {stable.program.has_negation()}")
print(f"positive-disjunctive mode: {len(positive.program.rules)} rules, "
      f"negation used: {positive.program.has_negation()}, "
      f"inequality used: {any(r.body_neq for r in positive.program.rules)}")

print("\nanswers (stable):  ",
      sorted(omq.certain_answers(stable, kb.abox).answers))
print("answers (positive):",
      sorted(omq.certain_answers(positive, kb.abox).answers))

print("\nfirst rules of the positive program:")
for rule in positive.program.rules[:8]:
    print(" ", rule)
