"""Central finite-difference gradient oracle, independent of autograd.

A coordinate passes when |analytic - fd| < abs_floor (double-precision FD
noise floor) or the relative error |analytic - fd| / max(|analytic|, |fd|)
is below rel_tol.
"""

import numpy as np
import torch


def fd_grad_check(f, params, h=1e-5, rel_tol=1e-3, abs_floor=1e-7,
                  max_coords=None, seed=0):
    """Compare autograd gradients of the scalar f() against central differences.

    `params` are leaf tensors (requires_grad=True, float64). Returns the worst
    relative error seen; raises AssertionError on any failing coordinate.
    """
    loss = f()
    grads = torch.autograd.grad(loss, params, allow_unused=False)

    coords = [(ti, i) for ti, p in enumerate(params) for i in range(p.numel())]
    if max_coords is not None and len(coords) > max_coords:
        rng = np.random.default_rng(seed)
        picked = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[int(k)] for k in picked]

    worst = 0.0
    for ti, i in coords:
        flat = params[ti].data.reshape(-1)
        orig = flat[i].item()
        flat[i] = orig + h
        fp = float(f().detach())
        flat[i] = orig - h
        fm = float(f().detach())
        flat[i] = orig
        fd = (fp - fm) / (2.0 * h)
        analytic = grads[ti].reshape(-1)[i].item()
        err = abs(analytic - fd)
        if err < abs_floor:
            continue
        rel = err / max(abs(analytic), abs(fd))
        worst = max(worst, rel)
        assert rel < rel_tol, (
            f"param {ti} coord {i}: analytic {analytic:.6e} vs fd {fd:.6e} (rel {rel:.2e})"
        )
    return worst
