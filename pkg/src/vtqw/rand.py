"""Seeded random instance generators for the verification suites."""

from __future__ import annotations

import numpy as np
import scipy.stats

from .config import DEFAULT, Config
from .network import Distribution, Network
from .subroutine import (ReversibleExtension, VariableTimeSubroutine,
                         build_from_classical, phase_extension)


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_connected_network(seed, n_min: int = 3, n_max: int = 8,
                             extra_edge_p: float = 0.4,
                             weight_range=(0.2, 3.0)) -> Network:
    """Random spanning tree plus extra edges, weights uniform in range."""
    rng = rng_from(seed)
    n = int(rng.integers(n_min, n_max + 1))
    vertices = [f"v{k}" for k in range(n)]
    edges = []
    present = set()
    for k in range(1, n):
        j = int(rng.integers(0, k))
        edges.append((vertices[j], vertices[k],
                      float(rng.uniform(*weight_range))))
        present.add(frozenset((j, k)))
    for a in range(n):
        for b in range(a + 1, n):
            if frozenset((a, b)) in present:
                continue
            if rng.random() < extra_edge_p:
                edges.append((vertices[a], vertices[b],
                              float(rng.uniform(*weight_range))))
                present.add(frozenset((a, b)))
    return Network(vertices, edges)


def random_distribution(rng, ids, min_mass: float = 0.05) -> Distribution:
    raw = rng.uniform(min_mass, 1.0, size=len(ids))
    raw /= raw.sum()
    return Distribution({u: float(p) for u, p in zip(ids, raw)})


def random_stopping_law(rng, tmax: int, support: int | None = None) -> list:
    """Random law on [1, tmax] with a small random support."""
    times = sorted(rng.choice(np.arange(1, tmax + 1),
                              size=support or int(rng.integers(1, min(3, tmax) + 1)),
                              replace=False).tolist())
    probs = rng.uniform(0.2, 1.0, size=len(times))
    probs /= probs.sum()
    return [(int(t), float(p)) for t, p in zip(times, probs)]


def random_classical_subroutine(seed, n_inputs: int = 2, tmax: int = 3,
                                error_p: float = 0.0, *,
                                config: Config = DEFAULT):
    """Classically built subroutine with random laws, answers, and errors."""
    rng = rng_from(seed)
    laws, answers, errors = {}, {}, {}
    for k in range(n_inputs):
        laws[k] = random_stopping_law(rng, tmax)
        answers[k] = int(rng.integers(0, 2))
        errors[k] = ([(t, float(rng.uniform(0.0, error_p))) for t, _ in laws[k]]
                     if error_p > 0 else [])
    sub = build_from_classical(laws, answers, errors, config=config)
    return sub, phase_extension(sub)


def random_block_subroutine(seed, n_inputs: int = 2, tmax: int = 3, *,
                            n_answers: int = 2, config: Config = DEFAULT):
    """Haar-random unitaries respecting the nested-halting block structure.

    Each U_t is the identity on answers (x) H_{t-1} and Haar random on the
    complement, so the halting invariance holds exactly while the stopping
    laws and errors are generic.
    """
    rng = rng_from(seed)
    if tmax % 2 == 0:
        raise ValueError("tmax must be odd")
    z_sizes = [0] * tmax
    nz = int(rng.integers(tmax, tmax + 3))
    for _ in range(nz):
        z_sizes[int(rng.integers(0, tmax))] += 1
    if z_sizes[-1] == 0:
        z_sizes[-1] += 1
        nz += 1
    dim = n_answers * nz

    def az(a, z):
        return a * nz + z

    unitaries = [None]
    blocks = []
    for t in range(1, tmax + 1):
        frozen = [az(a, z) for a in range(n_answers)
                  for s in range(1, t) for z in range(sum(z_sizes[:s - 1]),
                                                      sum(z_sizes[:s]))]
        free = sorted(set(range(dim)) - set(frozen))
        blocks.append(free)
        layer = []
        for _ in range(n_inputs):
            u = np.eye(dim, dtype=complex)
            if len(free) > 1:
                haar = scipy.stats.unitary_group.rvs(len(free), random_state=rng)
                u[np.ix_(free, free)] = haar
            layer.append(u)
        unitaries.append(layer)

    # the initial workspace state sits in the last nonempty block
    last_nonempty = max(t for t in range(1, tmax + 1) if z_sizes[t - 1] > 0)
    z_init = sum(z_sizes[: last_nonempty - 1]) + int(
        rng.integers(0, z_sizes[last_nonempty - 1]))
    g = {k: int(rng.integers(0, n_answers)) for k in range(n_inputs)}
    sub = VariableTimeSubroutine(list(range(n_inputs)), n_answers, z_sizes,
                                 unitaries, g, z_init=z_init, config=config)
    return sub, phase_extension(sub) if n_answers == 2 else sub
