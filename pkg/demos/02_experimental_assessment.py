"""How sharp must the postselection be for a published experiment to violate the bound?

When the postselection cannot be assumed to be perfectly projective, the
bound picks up a penalty controlled by a witness C_S. Here we ask which value
of C_S the reported statistics of a photonic weak-value experiment need.
"""

from wvctx.bounds import bound_template1, noise_threshold_eps, required_cs
from wvctx.schemes import disturbance_pd

s = 8.10336
p_d = disturbance_pd(s)
p_F = 0.0475865
p_minus = 0.602927 * p_F

print(f"disturbance at s = {s}: p_d = {p_d:.5f}")
print(f"observed p_minus = {p_minus:.6f}, sharp-postselection bound = {bound_template1(p_F, p_d, 0.5):.6f}")
res = required_cs(p_minus, p_F, p_d, 0.5)
print(f"required C_S > {res.c_s:.6f} (feasible: {res.feasible})")

print("\nunbiased postselection noise that still leaves room for a violation:")
for p_E in (0.0, 0.25, 0.5, 1.0):
    print(f"  p_E = {p_E:.2f}: eps < {noise_threshold_eps(p_E):.4f}")
