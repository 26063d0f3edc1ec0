#!/usr/bin/env python3
"""Three independent verdicts on the same instance.

The layered engine evaluates the compiled program; core enumeration
decides by exhausting small candidate interpretations and running the
type-elimination fixpoint; the bounded countermodel search works directly
under the DL semantics.  They must never contradict each other.
"""

from itertools import product

import omq
from omq import NormalKB, RoleAssert

KB = """
tbox {
  Teacher <= exists teaches . Course;
  Seminar <= Course;
  Teacher <= forall teaches . not Cancelled;
}
abox { Teacher(t); Course(c1); Course(c2); Seminar(c2); Cancelled(c1); }
closed { Course; Seminar; }
"""

kb = omq.parse_kb(KB)
o = omq.build_omq(kb, omq.parse_query("q(x, y) :- teaches(x, y)."))
report = omq.certain_answers(omq.rewrite(o), kb.abox)
nkb = NormalKB(o.tbox, o.sigma, kb.abox)
inds = omq.individuals_of(o, kb.abox)

print(f"{'tuple':10} {'engine':>8} {'core-enum':>10} {'bounded':>14}")
for tup in product(inds, repeat=2):
    engine = tup in report.answers
    enum = omq.core_enumeration_decide(o, kb.abox, tup)
    counter = omq.bounded_model_search(nkb, RoleAssert("teaches", *tup), 5)
    bounded = "countermodel" if counter is not None else "abstains"
    print(f"{' '.join(tup):10} {str(engine):>8} {str(enum):>10} {bounded:>14}")
    assert engine == enum
    assert counter is None or not engine

print("\nall three routes agree")
