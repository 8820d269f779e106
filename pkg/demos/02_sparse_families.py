# Local mean oscillation and sparse stopping families.
import numpy as np

from sparsedom.czop import SMOOTH, hilbert_kernel, maximal_truncation
from sparsedom.grid import Box
from sparsedom.lerner import build_sparse, lerner_bound, verify_sparse
from sparsedom.signal import GridFunction, oscillation

dom = Box((-1.0,), 2.0)
n = 1024

# oscillation ignores a lambda-fraction of the worst values
jumpy = GridFunction(dom, np.where(np.arange(n) < n // 2, 0.0, 1.0))
print("oscillation of a jump, lambda = 1/8:", oscillation(jumpy, dom, 0.125))
print("on the left half only:", oscillation(jumpy, Box((-1.0,), 1.0), 0.125))

# the stopping family for T_* f, f an indicator
f = GridFunction.from_callable(lambda x: ((x >= 0) & (x < 0.5)).astype(float), dom, n)
g = maximal_truncation(hilbert_kernel(), SMOOTH, f)
fam = build_sparse(g)
print("family size:", len(fam.cubes))
print("invariants:", verify_sparse(fam))
for Q in fam.cubes[:6]:
    print("  level", Q[0], "box", fam.box(Q).bounds())

lb = lerner_bound(g, family=fam)
print("fitted constant in the median-deviation bound:", round(lb.fitted_C, 4))

# noise produces many small cubes but stays sparse
noise = GridFunction(dom, np.random.default_rng(0).normal(size=n))
fam = build_sparse(noise)
print("noise family:", verify_sparse(fam))
