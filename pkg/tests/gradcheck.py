"""Central finite-difference oracle, independent of the analytic backward pass."""

import numpy as np


def numeric_grads(loss_fn, params, h=1e-4):
    out = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = p[i]
            p[i] = orig + h
            up = loss_fn()
            p[i] = orig - h
            down = loss_fn()
            p[i] = orig
            g[i] = (up - down) / (2 * h)
        out.append(g)
    return out


def relative_error(analytic, numeric):
    """Largest per-array ``||a - n|| / max(||a||, ||n||)``."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = max(np.linalg.norm(a), np.linalg.norm(n))
        if scale == 0:
            continue
        worst = max(worst, float(np.linalg.norm(a - n) / scale))
    return worst
