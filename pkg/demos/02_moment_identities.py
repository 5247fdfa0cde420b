"""Check the Haar-average identities that power the variance bounds.

The closed-form evaluators come from the first and second moments of unitary
matrix elements; every one is cross-validated here against a plain Monte-Carlo
average over freshly sampled Haar unitaries.

Run:  python demos/02_moment_identities.py
"""
import numpy as np

from plateau_lab import moments as mo
from plateau_lab.ensembles import RngStream

SAMPLES = 30_000
rng = np.random.default_rng(0)
d = 4


def ginibre():
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)


a, b, c, dd = (ginibre() for _ in range(4))

print("first moment   <Tr[V a V+ b]>")
est = mo.mc_haar_integral(lambda v: np.trace(v @ a @ v.conj().T @ b), d, SAMPLES, RngStream(1))
print(f"  exact {mo.first_moment_exact(a, b):.6f}")
print(f"  MC    {est.value:.6f}  (stderr {est.stderr:.2g})")

print("second moment  <Tr[V a V+ b V c V+ d]>")
est = mo.mc_haar_integral(
    lambda v: np.trace(v @ a @ v.conj().T @ b @ v @ c @ v.conj().T @ dd),
    d, SAMPLES, RngStream(2),
)
print(f"  exact {mo.second_moment_exact_chain(a, b, c, dd):.6f}")
print(f"  MC    {est.value:.6f}  (stderr {est.stderr:.2g})")

print("second moment  <Tr[V a V+ b] Tr[V c V+ d]>")
est = mo.mc_haar_integral(
    lambda v: np.trace(v @ a @ v.conj().T @ b) * np.trace(v @ c @ v.conj().T @ dd),
    d, SAMPLES, RngStream(3),
)
print(f"  exact {mo.second_moment_exact_product(a, b, c, dd):.6f}")
print(f"  MC    {est.value:.6f}  (stderr {est.stderr:.2g})")

print("one-sided twirl  <(1 x V) a (1 x V+)> = (Tr_2[a] x 1)/d_2")
mean, se = mo.mc_subsystem_twirl(a, (2, 2), SAMPLES, RngStream(4))
exact = mo.subsystem_twirl_exact(a, (2, 2))
print(f"  max entrywise deviation {np.max(np.abs(mean - exact)):.3g} "
      f"(3 stderr = {3 * se.max():.3g})")

print("block decomposition identity (deterministic)")
res = mo.verify_bitstring_decomposition(a, b, (2, 2), rng=RngStream(5))
print(f"  residual {res:.3g}")

print("vanishing commutator-trace integral")
est = mo.verify_commutator_trace_zero((2, 2, 2, 2), SAMPLES, RngStream(6))
print(f"  MC {est.value:.2e}  (stderr {est.stderr:.2g})")

print("projected-twirl trace identities")
res3 = mo.verify_projected_twirl_formulas((2, 2, 2, 2), SAMPLES, RngStream(7))
print(f"  eq1: MC {res3.mc_first.value:.6f} vs exact {res3.exact_first:.6f}")
print(f"  eq2: MC {res3.mc_second.value:.6f} vs exact {res3.exact_second:.6f}")
