"""What happens when only the mesh is refined: saturation at the temporal
error level, without any step-size restriction.

The decoupled scheme treats the conductivity explicitly (by extrapolation),
which for many IMEX methods comes with a stability condition tying tau to h.
This one is unconditionally stable: we can push the mesh size far below the
time step and nothing blows up -- the error simply stops improving once the
O(h^2) part drops under the O(tau^2) part.

We sweep the mesh at two fixed time steps.  Each column of the resulting
table should (1) decrease like h^2 at first, (2) flatten at a plateau
proportional to tau^2, and (3) never increase.  Quartering tau lowers the
plateau by a factor of 16.

The combined error below is the sum of the two fields' L2 distances to
their nodal interpolants, measured at the final time T = 1.  The full-size
version of this study is `thermistor-fem sweep --preset fig-fixed-tau`.
"""

from thermistor_fem import SchemeConfig, run_one

TAUS = (0.1, 0.025)
MS = (8, 16, 32, 64, 128)

print(f"{'M':>6}" + "".join(f"{f'tau={tau}':>13}" for tau in TAUS))
columns = {tau: [] for tau in TAUS}
for M in MS:
    row = [f"{M:>6}"]
    for tau in TAUS:
        report = run_one(
            SchemeConfig(scheme="bdf2", M=M, elem_kind="tri", tau_rule=f"fixed:{tau}")
        )
        err = report.superclose_u_l2 + report.superclose_phi_l2
        columns[tau].append(err)
        row.append(f"{err:>13.3e}")
    print("".join(row))

for tau in TAUS:
    values = columns[tau]
    assert all(b <= 1.05 * a for a, b in zip(values[:-1], values[1:])), \
        "refining the mesh must never increase the error"
    print(f"\ntau = {tau}: error shrank {values[0] / values[-1]:.0f}x before "
          f"plateauing near {values[-1]:.2e}")

plateau_ratio = columns[TAUS[0]][-1] / columns[TAUS[1]][-1]
print(f"\nplateau ratio between the two steps: {plateau_ratio:.1f} "
      f"(tau ratio {TAUS[0] / TAUS[1]:.0f}, so order-2 stepping predicts "
      f"{(TAUS[0] / TAUS[1]) ** 2:.0f})")
