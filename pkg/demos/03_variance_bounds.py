"""Barren-plateau bounds for deep global perceptrons, both training schemes.

Deep global perceptrons drawn from the Haar measure satisfy the 2-design
assumptions of the variance bounds exactly, so the Monte-Carlo variance must
sit below the closed forms at every width: O(1/4^n) for the fidelity cost
trained gate-wise, O(1/2^n) for the local cost and for the simultaneous
matrix-update scheme. Widths above 7 are refused (14-qubit register guard).

Run:  python demos/03_variance_bounds.py  (a few minutes)
"""
from plateau_lab.experiments import bound_matrix_flow, bound_rpqc, run_sweep

SAMPLES = 5_000

print("gate-wise scheme (probed rotation between Haar factors)")
rows = run_sweep([2, 3, 4], "global-deep", ["global", "local"], "rpqc", SAMPLES, seed=1)
for row in rows:
    print(
        f"  n={row.n} {row.cost_kind:6s} var={row.grad_var:.3e} "
        f"ci_hi={row.var_ci_hi:.3e}  bound={row.bound_value:.3e}"
    )

print("simultaneous update scheme (dC/ds at s = 0)")
rows = run_sweep([2, 3, 4], "global-deep", ["global"], "matrix-flow", SAMPLES, seed=2)
for row in rows:
    print(
        f"  n={row.n} {row.cost_kind:6s} var={row.grad_var:.3e} "
        f"ci_hi={row.var_ci_hi:.3e}  bound={row.bound_value:.3e}"
    )

print("closed forms alone, wider range:")
print(f"{'n':>3} {'gatewise global':>16} {'gatewise local':>15} {'simultaneous':>13}")
for n in range(1, 11):
    print(
        f"{n:>3} {bound_rpqc(n, 'global'):>16.3e} {bound_rpqc(n, 'local'):>15.3e} "
        f"{bound_matrix_flow(n):>13.3e}"
    )
