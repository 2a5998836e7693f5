"""Close the loop with all three controllers and compare the trajectories.

The oracle solves the condensed QP at every step; the implicit controller
evaluates the equilibrium ReLU network whose fixed point encodes the same QP;
the explicit controller runs a finite-depth unravelling of that network.
At sufficient depth all three produce the same saturating trajectory.
"""

import numpy as np

from mpcnet import EXPLICIT, IMPLICIT, ORACLE, SimulationConfig, UnravelConfig, simulate
from mpcnet.presets import saturating_regulator

problem = saturating_regulator()
x0 = np.array([-200.0, -200.0])
steps = 30

oracle = simulate(problem, SimulationConfig(x0=x0, steps=steps, controller=ORACLE))
implicit = simulate(problem, SimulationConfig(x0=x0, steps=steps, controller=IMPLICIT))
explicit = simulate(
    problem,
    SimulationConfig(
        x0=x0, steps=steps, controller=EXPLICIT,
        unravel=UnravelConfig(K=-0.9, J=12000, tol=1e-12),
    ),
)

print(f"{'k':>3} {'x1':>10} {'x2':>10} {'u (oracle)':>11} {'u (implicit)':>13} {'u (explicit)':>13}")
for k in range(steps):
    print(
        f"{k:>3} {oracle.states[k][0]:>10.3f} {oracle.states[k][1]:>10.3f} "
        f"{oracle.inputs[k][0]:>11.5f} {implicit.inputs[k][0]:>13.5f} {explicit.inputs[k][0]:>13.5f}"
    )

print()
print("max |u_implicit - u_oracle| :", np.max(np.abs(implicit.inputs - oracle.inputs)))
print("max |u_explicit - u_oracle| :", np.max(np.abs(explicit.inputs - oracle.inputs)))
print("steps at the input bound    :", int(np.sum(np.abs(oracle.inputs) >= 10.0 - 1e-6)))
print("final ||x|| (oracle)        :", np.linalg.norm(oracle.states[-1]))
