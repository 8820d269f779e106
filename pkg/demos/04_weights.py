# Muckenhoupt characteristics of power weights and the weighted scaling run.
from sparsedom.experiments import ExperimentConfig, run_a2_scaling
from sparsedom.grid import Box
from sparsedom.weights import ainfty, ap_char, power_weight, shifted_family

dom = Box((-1.0,), 2.0)
n = 2048
fam = shifted_family(dom, n)
print(len(fam), "cubes in the test family")

for alpha in (-0.5, 0.0, 0.5, 0.9):
    w = power_weight(alpha, dom, n)
    print(f"|x|^{alpha:<4}: [w]_A2 = {ap_char(w, 2.0, fam):7.3f}   [w]_Ainf = {ainfty(w, fam):.3f}")

# w = |x|^(1 - delta) approaches the edge of A2 as delta -> 0.  The grid
# resolves the characteristic exactly, but the norm ratio of the operator
# stalls near log(1/h), so the last column keeps falling.
rows = run_a2_scaling(ExperimentConfig(a2_n=4096))
print("delta      [w]_A2   norm ratio   ratio/[w]")
for r in rows:
    print(f"{r['delta']:<9.5f} {r['char']:8.3f} {r['norm_ratio']:11.4f} {r['ratio_to_char']:10.4f}")
