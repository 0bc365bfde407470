"""Independent numerical oracles shared by the unit and acceptance suites."""

import numpy as np

from carlton.neural import (MlpParameters, TrainBatch, forward, huber, huber_grad, mellowmax,
                            td_loss_and_grad)


def fixed_target_loss(params, batch, target, delta=1.0):
    q = forward(params, batch.states)
    err = target - q[np.arange(len(batch.actions)), batch.actions]
    return float(np.mean(huber(err, delta)))


def max_gradient_relative_error(seed=0, k=3, hidden=8, batch_size=6, h=1e-6):
    """Analytic TD gradient vs central differences of the loss with the target frozen."""
    rng = np.random.default_rng(seed)
    net = MlpParameters(k, hidden, rng=rng)
    # push weights off zero so several units are active in both slopes
    for b in net.biases:
        b += rng.normal(0, 0.3, b.shape)
    states = rng.uniform(0, 1, (batch_size, 2 * k))
    batch = TrainBatch(states, rng.integers(k, size=batch_size), rng.normal(0, 2, batch_size),
                       rng.uniform(0, 1, (batch_size, 2 * k)))
    gamma, omega = 0.9, 0.2
    target = batch.rewards + gamma * mellowmax(forward(net, batch.next_states), omega, axis=1)
    _, grads = td_loss_and_grad(net, batch, gamma, omega)
    worst = 0.0
    for p, g in zip(net.arrays(), grads):
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = fixed_target_loss(net, batch, target)
            p[idx] = old - h
            down = fixed_target_loss(net, batch, target)
            p[idx] = old
            num[idx] = (up - down) / (2 * h)
        denom = np.maximum(np.maximum(np.abs(num), np.abs(g)), 1e-7)
        worst = max(worst, float(np.max(np.abs(num - g) / denom)))
    return worst


def mellowmax_property_violations(n=10_000, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(0, 3, (n, 10))
    omega = rng.uniform(0.01, 5.0, (n, 1))
    shift = rng.normal(0, 10, (n, 1))
    bad = 0
    for row, w, c in zip(x, omega[:, 0], shift[:, 0]):
        mm = mellowmax(row, w)
        tol = 1e-9 * (1 + abs(mm))
        if not (row.mean() - tol <= mm <= row.max() + tol):
            bad += 1
        if abs(mellowmax(row + c, w) - (mm + c)) > 1e-8 * (1 + abs(mm) + abs(c)):
            bad += 1
    return bad


def huber_c1_gap(delta=1.0, eps=1e-12):
    """Largest jump in value or slope across |e| = delta."""
    gaps = []
    for e in (delta, -delta):
        lo, hi = e * (1 - eps), e * (1 + eps)
        gaps.append(abs(huber(hi, delta) - huber(lo, delta)))
        gaps.append(abs(float(huber_grad(hi, delta)) - float(huber_grad(lo, delta))))
        # one-sided difference quotients must agree with the analytic slope
        h = 1e-6 * delta
        left = (huber(e, delta) - huber(e - h, delta)) / h
        right = (huber(e + h, delta) - huber(e, delta)) / h
        gaps.append(max(abs(left - np.sign(e) * delta), abs(right - np.sign(e) * delta)) - h)
    return max(0.0, max(gaps))


def brute_force_optimum(scenario, params, target_db=4.0):
    """Exact best mean on-channel quality by scalar enumeration, in rationals."""
    import itertools
    from fractions import Fraction

    from carlton.observation import user_average_sinr

    n, k = scenario.n_networks, params.n_channels
    best, best_assignments = Fraction(-1), []
    for assignment in itertools.product(range(k), repeat=n):
        total = Fraction(0)
        for net in range(n):
            m = scenario.networks[net].user_count
            good = sum(user_average_sinr(scenario, assignment, net, j, assignment[net], params) > target_db
                       for j in range(m))
            total += Fraction(good, m)
        value = total / n
        if value > best:
            best, best_assignments = value, [assignment]
        elif value == best:
            best_assignments.append(assignment)
    return best, best_assignments
