"""Textbook outer query circuits used by the verification suites.

All circuits follow the same skeleton: split amplitude between the resting
index and a search index, query the phase oracle, interfere back, and stash
the recovered bit before moving on. The two-bit circuits store g_1 in the
workspace register, recover g_2 on the index register, and combine with a
final permutation, so they are exact (zero outer error) with one query per
input bit.
"""

from __future__ import annotations

import math

import numpy as np

from .alg_compose import QUERY, OuterAlgorithm
from .config import DEFAULT, Config


def _basis(n: int, n_y: int):
    return [(i, b, y) for i in range(n + 1) for b in (0, 1)
            for y in range(n_y)]


def _index(n_y: int, i: int, b: int, y: int) -> int:
    return (i * 2 + b) * n_y + y


def hadamard_pair(n: int, n_y: int, ia: int, ib: int) -> np.ndarray:
    """Hadamard on the two-dimensional index subspace {ia, ib}."""
    dim = (n + 1) * 2 * n_y
    u = np.eye(dim, dtype=complex)
    r = 1.0 / math.sqrt(2.0)
    for b in (0, 1):
        for y in range(n_y):
            pa, pb = _index(n_y, ia, b, y), _index(n_y, ib, b, y)
            u[pa, pa] = u[pa, pb] = r
            u[pb, pa] = r
            u[pb, pb] = -r
    return u


def permutation(n: int, n_y: int, rule) -> np.ndarray:
    """Permutation unitary from a bijection on (i, b, y) triples."""
    dim = (n + 1) * 2 * n_y
    u = np.zeros((dim, dim), dtype=complex)
    seen = set()
    for triple in _basis(n, n_y):
        target = rule(*triple)
        u[_index(n_y, *target), _index(n_y, *triple)] = 1.0
        seen.add(target)
    if len(seen) != dim:
        raise ValueError("rule is not a bijection")
    return u


def answer_rotation(n: int, n_y: int, eps: float) -> np.ndarray:
    """Rotation mixing the answer bit; flips the output with probability eps."""
    dim = (n + 1) * 2 * n_y
    u = np.eye(dim, dtype=complex)
    c, s = math.sqrt(1.0 - eps), math.sqrt(eps)
    for i in range(n + 1):
        for y in range(n_y):
            p0, p1 = _index(n_y, i, 0, y), _index(n_y, i, 1, y)
            u[p0, p0] = u[p1, p1] = c
            u[p1, p0] = s
            u[p0, p1] = -s
    return u


def single_bit_outer(eps_outer: float = 0.0, *,
                     config: Config = DEFAULT) -> OuterAlgorithm:
    """f = identity on one bit: split, query, interfere, copy to the answer."""
    n, n_y = 1, 1
    ops = [hadamard_pair(n, n_y, 0, 1),
           QUERY,
           hadamard_pair(n, n_y, 0, 1),
           permutation(n, n_y, lambda i, b, y: (i, b ^ 1, y) if i == 1
                       else (i, b, y))]
    if eps_outer > 0.0:
        ops.append(answer_rotation(n, n_y, eps_outer))
    return OuterAlgorithm(n, n_y, ops, eps_outer=eps_outer, config=config)


def _two_bit_ops(combine, n_y: int = 2):
    """Recover g_1 into the workspace, g_2 onto the index, then combine."""
    n = 2
    stash = permutation(n, n_y, lambda i, b, y: (0, b, 1) if (i, y) == (1, 0)
                        else ((1, b, 0) if (i, y) == (0, 1) else (i, b, y)))
    return [
        hadamard_pair(n, n_y, 0, 1),
        QUERY,
        hadamard_pair(n, n_y, 0, 1),
        stash,                               # (i=1,y=0) <-> (i=0,y=1)
        hadamard_pair(n, n_y, 0, 2),
        QUERY,
        hadamard_pair(n, n_y, 0, 2),
        permutation(n, n_y, lambda i, b, y:
                    (i, b ^ combine(1 if i == 2 else 0, y), y)),
    ]


def two_bit_outer(kind: str, eps_outer: float = 0.0, *,
                  config: Config = DEFAULT) -> OuterAlgorithm:
    """Exact two-query circuits for OR, AND, XOR of two bits."""
    combine = {"or": lambda a, b: a | b,
               "and": lambda a, b: a & b,
               "xor": lambda a, b: a ^ b}[kind]
    ops = _two_bit_ops(combine)
    if eps_outer > 0.0:
        ops.append(answer_rotation(2, 2, eps_outer))
    return OuterAlgorithm(2, 2, ops, eps_outer=eps_outer, config=config)
