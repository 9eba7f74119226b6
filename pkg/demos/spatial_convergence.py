"""Mesh-refinement study: second-order temperature accuracy in L2, first
order in H1, and supercloseness to the interpolant.

We solve the manufactured thermistor problem on a sequence of triangle
meshes, halving the mesh size each time and keeping the time step tied to it
(tau = h / 2) so the temporal error never dominates.  Three quantities are
worth watching for the temperature:

  * |U - u|_L2            -- plain L2 error, expected order 2,
  * |U - u|_H1            -- plain H1 error, expected order 1,
  * |U - I_h u|_H1        -- distance to the nodal interpolant of u.

The third is the interesting one: although U and I_h u each differ from u at
first order in H1, they differ from *each other* at second order.  This
"supercloseness" is what the macroelement post-processing in
superconvergence_lift.py converts into an actually superconvergent field.

The same study is available from the command line as
`thermistor-fem sweep --preset fig-u --out fig_u.csv`.
"""

from thermistor_fem import preset_plan, render_order_table, run_plan

plan = preset_plan("fig-u")
print(f"running {len(plan.runs)} configurations "
      f"(scheme={plan.runs[0].scheme}, elements={plan.runs[0].elem_kind}, "
      f"M = {[c.M for c in plan.runs]}) ...\n")

result = run_plan(plan)
assert not result.failures, result.failures

print(render_order_table(result.reports))

print("Reading the table: each 'order' entry is log2 of the ratio of")
print("consecutive errors, i.e. the experimental convergence order against")
print("the mesh size.  u converges at order 2 in L2 and order 1 in H1, the")
print("interpolant distance ('superclose H1') at order 2, and the")
print("post-processed gradient ('postprocessed H1') also at order 2 --")
print("one full order better than the raw gradient.")
