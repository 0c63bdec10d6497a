"""From a doubled-max quasi-metric to a true metric within a factor 4."""
from fractions import Fraction

import numpy as np

from meandim.frink import (QuasiMetricMatrix, frink_metrize, metric_violations, random_quasi_metric,
                           sandwich_violations, verify_quasi_metric)

rng = np.random.default_rng(1)
q = random_quasi_metric(6, rng, "ultra")
print(verify_quasi_metric(q))
fm = frink_metrize(q)
print("rho:\n", np.array(q.rho, dtype=float).round(3))
print("D:\n", np.array(fm.D, dtype=float).round(3))
print("rho/4 <= D <= rho broken at:", sandwich_violations(fm))
print("metric axioms broken:", metric_violations(fm.D))

# a table breaking the doubled-max law is rejected with a witness triple
bad = QuasiMetricMatrix(np.array([[0, Fraction(1, 8), 1], [Fraction(1, 8), 0, Fraction(1, 8)],
                                  [1, Fraction(1, 8), 0]], dtype=object))
print(verify_quasi_metric(bad))
