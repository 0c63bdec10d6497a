"""Scale entropy of three systems, from exact counts up to covers."""
import math

import numpy as np

from meandim.dimension import metric_mean_dim_estimate, scale_entropy_table, toral_entropy_bracket
from meandim.systems import (QuantizedTorus, SftSystem, ToralAutomorphism, TorusSite, full_shift,
                             golden_mean_shift)

# %% full 2-shift: every scale sees all 2^(2N+1) words
ladder = [2.0**-e for e in range(2, 9)]
fs = scale_entropy_table(full_shift(1, 2), ladder=ladder, Ns=range(1, 6))
for eps in ladder:
    print(f"eps={eps:<10.6g} S in [{fs.S(eps)[0]:.6f}, {fs.S(eps)[1]:.6f}]")
print("log 2 =", math.log(2))
print("metric mean dimension slope:", metric_mean_dim_estimate(fs).ub)

# %% golden mean: running infimum over windows creeps down to log phi
gm = scale_entropy_table(golden_mean_shift(), ladder=(0.5,), Ns=range(1, 17))
print(np.round(gm.running_inf(0.5), 5))
print("log phi =", math.log((1 + 5**0.5) / 2))

# %% a circle-valued shift has one dimension per site
circle = SftSystem(1, TorusSite(QuantizedTorus(1, 2048)))
est = metric_mean_dim_estimate(scale_entropy_table(circle, ladder=[2.0**-e for e in (6, 7, 8)], Ns=(1,)))
print("circle shift slope:", est.lb, est.ub)

# %% cat map: volume and grid counts pin log of the expanding eigenvalue
cat = ToralAutomorphism(((2, 1), (1, 1)))
for N in (2, 4, 6):
    b = toral_entropy_bracket(cat, 2**-6, N)
    print(f"N={N}: [{b.lb:.4f}, {b.ub:.4f}]")
print("log lambda =", math.log((3 + 5**0.5) / 2))
