"""Finite-difference gradient oracle shared by the unit and acceptance tests.

Central differences only approximate the true derivative where the loss is
differentiable; ReLU and the L1 loss both have kinks. The batch sampler
rejects check points whose pre-activations or residuals sit within a margin
of a kink, which is where "the gradient" is not even defined.
"""

import numpy as np


def kink_distance(net, Q, Y, masks=None) -> float:
    """Smallest distance of any pre-activation or residual from zero."""
    out, cache = net._forward(Q, masks)
    x, hiddens, relu_masks, _ = cache
    dist = np.inf
    h = x
    for k in range(net.n_hidden):
        z = h @ net.weights[k] + net.biases[k]
        if k == net.skip_layer:
            z += x @ net.skip_weight
        dist = min(dist, float(np.min(np.abs(z))))
        h = np.where(z > 0, z, 0.0)
        if masks is not None:
            h = h * masks[k]
    dist = min(dist, float(np.min(np.abs(out - np.asarray(Y)))))
    return dist


def draw_clear_batch(net, rng, m=3, margin=1e-4, masks=None):
    """Random (Q, Y) whose loss surface is smooth within the FD step."""
    for _ in range(200):
        Q = rng.normal(size=(m, net.n_joints))
        Y = rng.normal(size=(m, net.n_out))
        if kink_distance(net, Q, Y, masks) > margin:
            return Q, Y
    raise AssertionError("could not find a kink-free check point")


def relative_gradient_error(net, Q, Y, masks=None, h=1e-6) -> float:
    """Worst per-matrix relative error of analytic vs central-difference grads."""
    _, grads = net.loss_and_gradients(Q, Y, masks)
    worst = 0.0
    for p, g in zip(net.parameters(), grads):
        fd = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp, _ = net.loss_and_gradients(Q, Y, masks)
            p[idx] = orig - h
            lm, _ = net.loss_and_gradients(Q, Y, masks)
            p[idx] = orig
            fd[idx] = (lp - lm) / (2.0 * h)
            it.iternext()
        denom = max(np.linalg.norm(g), np.linalg.norm(fd), 1e-12)
        worst = max(worst, np.linalg.norm(g - fd) / denom)
    return worst
