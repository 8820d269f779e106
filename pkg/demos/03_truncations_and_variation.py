# Truncated Hilbert transforms, sharp and smooth, and their q-variation.
import numpy as np

from sparsedom.czop import SHARP, SMOOTH, averaged_sharp, eps_grid, hilbert_kernel, truncations
from sparsedom.grid import Box
from sparsedom.signal import GridFunction, maximal
from sparsedom.variation import vq_operator, vq_sequence

H = hilbert_kernel()
dom = Box((-1.0,), 2.0)
f = GridFunction.from_callable(lambda x: ((x >= 0) & (x < 0.5)).astype(float), dom, 2048)
eps = eps_grid(f)
print(len(eps), "truncation radii from", eps[0], "to", eps[-1])

sharp = truncations(H, SHARP, f, eps)
smooth = truncations(H, SMOOTH, f, eps)
i = 1024 + 563  # the cell at x ~ 0.55, just right of the support
print("curve at x=%.3f" % f.centers()[i])
for e, a, b in zip(eps[::4], sharp[::4, i], smooth[::4, i]):
    print(f"  eps={e:.4f}  sharp={a:+.4f}  smooth={b:+.4f}")

# a smooth truncation is an average of sharp ones
big = eps[eps >= 8 * f.h]
err = np.abs(averaged_sharp(H, SMOOTH, f, big) - truncations(H, SMOOTH, f, big)).max()
print("averaging identity error:", err)

# the gap between sharp and smooth maximal truncations is controlled by Mf
gap = np.abs(np.abs(sharp).max(0) - np.abs(smooth).max(0))
print("max gap / Mf:", (gap / maximal(f).values).max())

# q-variation by dynamic programming
print("V^2 of 0,1,0,1:", vq_sequence([0, 1, 0, 1], 2).value)
# an indicator gives monotone curves (all q agree); oscillation separates them
wiggly = f.with_values(np.sign(np.sin(24 * np.pi * f.centers())) * (np.abs(f.centers()) < 0.5))
for q in (2.5, 3.0, 4.0):
    v = vq_operator(H, SMOOTH, wiggly, q, eps)
    print(f"q={q}: L2 norm of the variation {v.lp_norm(2):.4f}")
