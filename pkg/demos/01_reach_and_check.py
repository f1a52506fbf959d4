"""A single robot reaches a goal box while steering around an obstacle.

The task is written as text, parsed, compiled into a MILP and solved with the
built-in branch and bound.  The returned timed waypoints are then handed to the
interval monitor, which knows nothing about the MILP, to confirm the task holds
for every trajectory within the tracking error of the path.
"""

from stlplan.formula import AgentAtom
from stlplan.geometry import Workspace, box
from stlplan.monitor import check, sat_set
from stlplan.parser import parse_stl
from stlplan.planner import Agent, Problem, plan

ws = Workspace((-1, -1), (10, 10))
regions = {"goal": box((4, 0), (5, 1)), "obs": box((2, -1), (3, 0.5))}
task = parse_stl("F[0,10] goal & G[0,10] !obs", regions)
print("task in negation normal form:", task)

robot = Agent(init=(0, 0), size=0.2, eps=0.1)
problem = Problem(ws, regions, [robot], AgentAtom(1, task), T=10, vmax=1.0, Kmax=5)

# K grows from 1 until the model becomes feasible; every attempt is recorded
res = plan(problem)
for a in res.attempts:
    print(f"  K={a.K}: {a.status:<10} {a.binaries:>3} binaries {a.rows:>4} rows")
print("status", res.status, "K", res.K, "total travel time", round(res.objective, 3))

path = res.paths[0]
for t, p in zip(path.times, path.points):
    print(f"  t={t:6.3f}  p=({p[0]:.3f}, {p[1]:.3f})")

rep = check(problem.spec, res.paths, robot.eps, regions)
print("monitor verdict:", rep.satisfied)
# the satisfaction set of the goal reach, clipped to the horizon
print("times at which the task holds:", sat_set(task, path, robot.eps, 10.0, regions))
