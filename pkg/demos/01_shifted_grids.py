# Shifted dyadic grids and the covering cube.
# Every cube Q sits inside a cube R of one of the 3^d shifted grids, with
# room to spare: R is 3 to 6 times larger, and its k-th ancestor swallows the
# concentric 2^k-fold dilate of Q.
from sparsedom.grid import Box, ancestor, cover_cube, dilate

Q = Box((0.4,), 0.3)
u, R = cover_cube(Q, 0)
print("Q =", Q.bounds(), "-> shift", u, "R =", [float(x) for x in R.lower()], [float(x) for x in R.upper()])

# in two dimensions with k = 3
Q = Box((0.0, 0.0), 1.0)
u, R = cover_cube(Q, 3)
A = ancestor(R, 3)
print("shift", u, "side of R", R.side, "side of R^(3)", A.side)
print("8Q inside R^(3):", A.contains(dilate(Q, 8.0)))

# the covering works for awkward positions too
for corner in (0.333333, 0.999, -7.25):
    u, R = cover_cube(Box((corner,), 0.01), 5)
    print(f"corner {corner:>9}: shift {u[0]}, side ratio {float(R.side) / 0.01:.2f}")
