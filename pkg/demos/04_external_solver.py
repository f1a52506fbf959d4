"""Hand the MILP to an outside solver through a CPLEX LP file.

The lp-file backend writes the model and stops.  Any MILP solver can read it;
here HiGHS does the work if it is installed, otherwise the built-in solver
stands in.  The answer goes back as a plain ``name value`` solution file, and
a second call to the planner turns it into checked paths.
"""

import os
import tempfile

from stlplan.formula import AgentAtom, Atom, Eventually
from stlplan.geometry import Workspace, box
from stlplan.milp import write_solution
from stlplan.monitor import check
from stlplan.planner import Agent, Problem, build_model, plan
from stlplan.solver.bnb import solve_milp

regions = {"goal": box((4, 0), (5, 1))}
problem = Problem(Workspace((-1, -1), (10, 10)), regions, [Agent((0, 0), 0.2, 0.1)],
                  AgentAtom(1, Eventually(0, 10, Atom("goal"))), T=10, vmax=1.0, K0=2, Kmax=2)

tmp = tempfile.mkdtemp()
lp = os.path.join(tmp, "reach.lp")
first = plan(problem, backend="lp-file", lp_path=lp)
print(first.status, "->", lp)
print(open(lp).read()[:400], "...")

built = build_model(problem, 2)
try:
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(lp)
    h.run()
    names = h.getLp().col_names_
    vals = h.getSolution().col_value
    text = "".join(f"{n} {v!r}\n" for n, v in zip(names, vals))
    print("solved by HiGHS, objective", h.getInfo().objective_function_value)
except ImportError:
    text = write_solution(built.model, solve_milp(built.model).x)
    print("HiGHS not installed, used the built-in solver")

with open(lp + ".sol", "w") as fh:
    fh.write(text)
res = plan(problem, backend="lp-file", lp_path=lp)
print(res.status, "objective", round(res.objective, 3))
print("monitor verdict:", check(problem.spec, res.paths, 0.1, regions).satisfied)
