import numpy as np
import pytest

from freqtimenet.nn import mse_loss


def finite_difference_grads(net, obs, target, snr=None, h=1e-5,
                            coords=None, rng=None):
    """Central finite differences of the MSE loss wrt net parameters.

    Returns (analytic, numeric) flat arrays.  ``coords`` limits the sweep
    to a random subset of parameter coordinates for speed.
    """
    out, caches = net.forward(obs, snr)
    _, grad = mse_loss(out, target)
    analytic = np.concatenate(
        [g.ravel() for g in net.backward(caches, grad)])
    params = net.parameters()
    flat_views = [p.ravel() for p in params]
    sizes = [v.size for v in flat_views]
    offsets = np.cumsum([0] + sizes)
    total = offsets[-1]
    if coords is None:
        indices = np.arange(total)
    else:
        rng = rng or np.random.default_rng(0)
        indices = rng.choice(total, size=min(coords, total), replace=False)

    numeric = np.full(total, np.nan)
    for k in indices:
        pi = np.searchsorted(offsets, k, side="right") - 1
        j = k - offsets[pi]
        view = flat_views[pi]
        orig = view[j]
        view[j] = orig + h
        lp, _ = mse_loss(net.forward(obs, snr)[0], target)
        view[j] = orig - h
        lm, _ = mse_loss(net.forward(obs, snr)[0], target)
        view[j] = orig
        numeric[k] = (lp - lm) / (2.0 * h)
    mask = ~np.isnan(numeric)
    return analytic[mask], numeric[mask]


def assert_grads_close(analytic, numeric, rel=1e-5, abs_floor=1e-9):
    """Relative error below ``rel`` with a small absolute floor for
    coordinates whose gradient sits below finite-difference resolution."""
    err = np.abs(analytic - numeric)
    bound = rel * (np.abs(analytic) + np.abs(numeric)) + abs_floor
    worst = np.argmax(err - bound)
    assert np.all(err <= bound), (
        f"gradient mismatch: analytic={analytic[worst]:.3e} "
        f"numeric={numeric[worst]:.3e} err={err[worst]:.3e}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
