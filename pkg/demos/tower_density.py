"""Free cells of a tower keep more than a quarter of every prefix."""
import numpy as np

from meandim.constructions import (Tower, TowerParams, free_fraction, free_index_recursion,
                                   minimality_gap_check, quarter_density_check)
from meandim.systems import QuantizedTorus, ToralAutomorphism, TorusSite

p = TowerParams("sec6", (1, 8, 20, 40, 10), (1, 1, 1, 1), (1, 1, 1, 1))
for n in range(p.stages + 1):
    print(f"stage {n}: span {p.span(n):>8d}  free fraction {free_fraction(p, n)}")

I = free_index_recursion(p, 2).I
print("first free cells of stage 2:", I[:12])
rep = quarter_density_check(p, 10**6)
print("prefix density > 1/4 for every t <= 10^6:", rep.ok, rep.cases)

# concrete blocks over the quantized cat map
site = TorusSite(QuantizedTorus(2, 8), ToralAutomorphism(((2, 1), (1, 1))))
tower = Tower(site, "sec5", (1, 2, 2), seed=0)
for n in (1, 2):
    g = minimality_gap_check(tower, n, pairs=5)
    print(f"n={n}: worst minimized gap {g.max_gap:.3g} below {g.bound:.4f}: {g.ok}")
print("stage lengths:", tower.L, "net sizes:", [s.b for s in tower.stages])
print("one stage-2 block:", np.array2string(tower.sample_A(2, 1)[0][:24]))
