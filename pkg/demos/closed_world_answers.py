#!/usr/bin/env python3
"""Closed predicates make query answering non-monotonic.

With the set of courses closed, Alice must attend the one course that is
not a graduate course; opening the set, or adding a third course, removes
the answer again.
"""

import omq
from omq import ConceptAssert, KnowledgeBase

KB = """
tbox {
  BScStud <= Student;
  Student <= exists attends . Course;
  BScStud <= forall attends . not GradCourse;
}
abox { BScStud(a); Course(c1); Course(c2); GradCourse(c2); }
closed { Course; }
"""

kb = omq.parse_kb(KB)
query = omq.parse_query("q(x, y) :- attends(x, y).")

closed = omq.build_omq(kb, query)
print("Course closed:           ",
      sorted(omq.certain_answers(omq.rewrite(closed), kb.abox).answers))

open_kb = KnowledgeBase.of(kb.tbox, (), kb.abox)
opened = omq.build_omq(open_kb, query)
print("Course open:             ",
      sorted(omq.certain_answers(omq.rewrite(opened), open_kb.abox).answers))

extended = kb.abox + (ConceptAssert("Course", "c3"),)
print("Course closed + Course(c3):",
      sorted(omq.certain_answers(omq.rewrite(closed), extended).answers))
