"""Random turnstile streams with a known net graph."""

import numpy as np


def turnstile_stream(n, final_edges, rng, n_noise_edges=10, max_changes=3):
    """Interleaved inserts, reweights and deletes whose net effect is ``final_edges``.

    Parameters
    ----------
    final_edges : dict mapping ``(u, v)`` with ``u < v`` to a target weight.

    Returns
    -------
    updates : list of ``(u, v, w_old, delta)``
    net : dict of final weights as the stream arithmetic produces them
    """
    current = {}
    plans = {}
    for e, w in final_edges.items():
        steps = [float(x) for x in rng.uniform(0.01, 1.0, rng.integers(0, max_changes + 1))]
        plans[e] = steps + [float(w)]
    iu, iv = np.triu_indices(n, 1)
    free = [(int(a), int(b)) for a, b in zip(iu, iv) if (int(a), int(b)) not in final_edges]
    for idx in rng.permutation(len(free))[:n_noise_edges]:
        e = free[idx]
        plans[e] = [float(x) for x in rng.uniform(0.01, 1.0, rng.integers(1, max_changes + 1))] + [0.0]
    queue = [e for e, steps in plans.items() for _ in steps]
    queue = [queue[i] for i in rng.permutation(len(queue))]
    cursor = dict.fromkeys(plans, 0)
    updates = []
    for e in queue:
        target = plans[e][cursor[e]]
        cursor[e] += 1
        w_old = current.get(e, 0.0)
        delta = target - w_old
        updates.append((e[0], e[1], w_old, delta))
        w_new = w_old + delta
        current[e] = 0.0 if abs(w_new) <= 1e-12 else min(w_new, 1.0)
    # steps of an edge are consumed in queue order, so its last step is final
    assert all(cursor[e] == len(steps) for e, steps in plans.items())
    net = {e: w for e, w in current.items() if w > 0}
    return updates, net


def as_arrays(updates):
    if not updates:
        z = np.zeros(0)
        return z.astype(np.int64), z.astype(np.int64), z, z
    u, v, w_old, delta = zip(*updates)
    return np.array(u), np.array(v), np.array(w_old), np.array(delta)


def insert_only(net):
    return [(u, v, 0.0, w) for (u, v), w in sorted(net.items())]
