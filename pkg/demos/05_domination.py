# Pointwise domination of T_* f and V_q f by Mf plus a sum of positive shifts.
import numpy as np

from sparsedom.czop import hilbert_kernel
from sparsedom.domination import build_shifts, dominate, shift_apply
from sparsedom.grid import Box
from sparsedom.lerner import build_sparse
from sparsedom.signal import GridFunction

H = hilbert_kernel()
dom = Box((-1.0,), 2.0)

for n in (1024, 2048):
    f = GridFunction.from_callable(lambda x: ((x >= 0) & (x < 0.5)).astype(float), dom, n)
    for mode in ("maximal", "variation"):
        r = dominate(H, f, mode=mode)
        print(f"n={n} {mode:9s} C={r.fitted_C:.4f}  C(K_max=8)={r.fitted_C_at(8):.4f}  cubes={r.family_size}")

print("per-k contribution norms:", np.round(r.contribution_norms, 5))

# a single shift applied to the constant one counts covering cubes
fam = build_sparse(GridFunction(Box((0.0,), 1.0), np.random.default_rng(0).normal(size=256)))
wide = GridFunction(Box((-8.0,), 16.0), np.ones(4096))
for S in build_shifts(fam, 0):
    print("shift", S.u, "cubes", len(S.pairs), "max multiplicity", shift_apply(S, wide).values.max())
