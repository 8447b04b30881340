"""Fixed Gauss-Legendre panel rules used by the boundary-integral evaluator.

The far-field kernel is analytic on every panel that keeps a healthy
distance-to-length ratio from the singular point, so a modest fixed rule
with geometric panel subdivision converges exponentially; no fancy adaptive
machinery is needed there.
"""

import numpy as np

# 12-point rule for production sums, 6-point embedded rule for error probes.
GL12_NODES, GL12_WEIGHTS = np.polynomial.legendre.leggauss(12)
GL6_NODES, GL6_WEIGHTS = np.polynomial.legendre.leggauss(6)

# A panel is "comfortable" when its length is at most this multiple of its
# distance to the evaluation point; GL12 then resolves the kernel to ~1e-8.
SAFE_LENGTH_TO_DIST = 1.5


def panel_points(a, b, nodes):
    """Map rule nodes from [-1, 1] onto the segment a..b (both (2,) arrays)."""
    t = 0.5 * (nodes + 1.0)
    return a[None, :] + t[:, None] * (b - a)[None, :]


def segment_point_distance(a, b, x):
    """Euclidean distance from point x to segment a..b."""
    d = b - a
    dd = float(d @ d)
    if dd == 0.0:
        return float(np.hypot(*(x - a)))
    t = float((x - a) @ d) / dd
    t = min(1.0, max(0.0, t))
    p = a + t * d
    return float(np.hypot(*(x - p)))
