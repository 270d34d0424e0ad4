"""Two-link arm steered in joint space around a workspace point obstacle with SDC.

The obstacle field is the arm-to-point distance as a function of the joint
angles; the base skill is linear decay toward a goal configuration.
"""

import argparse

import numpy as np

from sdtlab.barrier import BarrierConfig
from sdtlab.core import SolverKind
from sdtlab.diffeo import FlowMap
from sdtlab.harness.rollout import RolloutConfig, rollout_batch
from sdtlab.modulate import ModulatedSystem, ModulationMethod
from sdtlab.sdf import ArticulatedBody, JointSpaceField


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--point", type=float, nargs=2, default=[1.2, 0.9])
    ap.add_argument("--variant", choices=["sdc", "sddc"], default="sdc")
    ap.add_argument("--s-grad", type=float, default=5e-4)
    ap.add_argument("--horizon", type=float, default=0.5)
    args = ap.parse_args()
    body = ArticulatedBody(link_lengths=(1.0, 0.8), radii=(0.08, 0.06))
    field = JointSpaceField(body=body, x_query=tuple(args.point))
    q_start, q_goal = np.array([-0.3, 0.2]), np.array([1.4, 0.3])
    base = lambda Q: -(np.asarray(Q) - q_goal)  # noqa: E731
    # joint-space gradients are not unit length, so keep s t small: the flow must not
    # reach the saturated shell from the states the arm visits
    barrier = BarrierConfig(s_grad=args.s_grad, t_save=0.05)
    system = ModulatedSystem(base, FlowMap(field, barrier, horizon=args.horizon, solver=SolverKind("rk4", 10)),
                             ModulationMethod(args.variant))
    rc = RolloutConfig(dt=0.02, max_steps=800, goal_tol=1e-2)
    for label, vel in (("base", lambda X, off: base(X)), (args.variant, system.velocity_batch)):
        r = rollout_batch(vel, q_start[None], q_goal, rc, field=field, t_save=barrier.t_save)[0]
        clearance = field.eval(r.traj.states)
        print(f"{label:<5} status {r.status:<9} steps {len(r.traj) - 1:<4} min clearance {clearance.min():+.3f}  "
              f"final q {np.round(r.traj.states[-1], 3).tolist()}")


if __name__ == "__main__":
    main()
