"""Goals handed out by the solver rather than by the user.

Each goal only has to be visited by some robot, which the specification states
as a disjunction over agents.  Nothing says who goes where, yet the optimum
sends each robot to the goal on its own side.  Pinning the crossed assignment
shows what that choice saves.
"""

import json
import os

from stlplan.cli import PACK_DIR
from stlplan.formula import Atom, Eventually
from stlplan.monitor import sat_set
from stlplan.planner import plan
from stlplan.scenario import load_scenario, scenario_from_dict

path = os.path.join(PACK_DIR, "extra", "assign-2.json")
sc = load_scenario(path)
p = sc.problem
res = plan(p, sc.solver.params())
print("free assignment:", res.status, "objective", round(res.objective, 3))
for i, (q, a) in enumerate(zip(res.paths, p.agents), start=1):
    seen = [g for g in ("G1", "G2") if sat_set(Eventually(0, p.T, Atom(g)), q, a.eps, p.T, p.regions).contains(0)]
    print(f"  robot {i} starts at {a.init} and visits {seen}")

doc = json.load(open(path))
walls = doc["spec"].split(" & (")[0]
doc["spec"] = walls + " & A1(F[0,30] G2) & A2(F[0,30] G1)"
crossed = scenario_from_dict(doc)
res2 = plan(crossed.problem, crossed.solver.params())
print("crossed assignment:", res2.status, "objective", round(res2.objective, 3))
