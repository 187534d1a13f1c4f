"""Composing an outer query algorithm with a variable-time inner subroutine.

The outer algorithm acts on span{|i>|b,y>} with i in 0..n (0 is the resting
index), answer bit b, and workspace y. Queries occupy odd-numbered
unitaries V_{l+1} for even l, and apply the phase oracle
O_g|i,b,y> = (-1)^{g_i}|i,b,y> (identity on i = 0). The composed
phase-estimation space glues a ladder gadget for the inner subroutine into
every query step of the outer algorithm's line-shaped overlap graph, with
alpha_t = 1 throughout.

Amplitude parked on the resting index during a query step traverses a
trivial pass-through state instead of a ladder (the oracle fixes i = 0), so
standard oracle-interference circuits work unchanged; the query weights
then satisfy sum_{i >= 1} qbar_i + qbar_0 = 1, with equality on [n] exactly
when no amplitude rests during queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _linalg
from .config import DEFAULT, Config
from .phase_estimation import (Decision, PhaseEstimationInstance,
                               WitnessCertificate, decide,
                               verify_negative_witness,
                               verify_positive_witness)
from .subroutine import (ReversibleExtension, VariableTimeSubroutine,
                         phase_extension)


class CompositionError(ValueError):
    """Raised when the outer algorithm or composition inputs are invalid."""


QUERY = "query"


class OuterAlgorithm:
    """Explicit unitary list with declared query slots.

    ``ops`` is a list whose entries are dense unitaries on the
    (n+1) * 2 * n_y outer space or the string ``"query"``. The builder
    inserts identities so that queries land on odd-numbered unitaries
    (V_{l+1} with l even) and the total length is even.
    """

    def __init__(self, n: int, n_y: int, ops: Sequence, eps_outer: float = 0.0,
                 *, config: Config = DEFAULT):
        self.config = config
        self.n = int(n)
        self.n_y = int(n_y)
        self.dim = (self.n + 1) * 2 * self.n_y
        self.eps_outer = float(eps_outer)

        padded: list = []
        for op in ops:
            if isinstance(op, str) and op == QUERY:
                if len(padded) % 2 == 1:
                    padded.append(np.eye(self.dim, dtype=complex))
                padded.append(QUERY)
            else:
                mat = np.asarray(op, dtype=complex)
                if mat.shape != (self.dim, self.dim):
                    raise CompositionError(
                        f"unitary of shape {mat.shape}, expected {(self.dim,) * 2}")
                if _linalg.unitarity_defect(mat) > config.tol_construct:
                    raise CompositionError("outer step is not unitary")
                padded.append(mat)
        if len(padded) % 2 == 1:
            padded.append(np.eye(self.dim, dtype=complex))
        self.steps = padded
        self.length = len(padded)
        self.queries = tuple(k for k, op in enumerate(padded)
                             if isinstance(op, str))

    def basis_index(self, i: int, b: int, y: int) -> int:
        return (i * 2 + b) * self.n_y + y

    def oracle(self, g: Mapping[int, int]) -> np.ndarray:
        diag = np.ones(self.dim, dtype=complex)
        for i in range(1, self.n + 1):
            sign = (-1.0) ** int(g[i])
            for b in (0, 1):
                for y in range(self.n_y):
                    diag[self.basis_index(i, b, y)] = sign
        return np.diag(diag)

    def run(self, g: Mapping[int, int]) -> np.ndarray:
        """States |w_O^l> for l = 0..L, rows of the returned array."""
        states = np.zeros((self.length + 1, self.dim), dtype=complex)
        states[0, self.basis_index(0, 0, 0)] = 1.0
        oracle = self.oracle(g)
        for ell, op in enumerate(self.steps):
            mat = oracle if isinstance(op, str) else op
            states[ell + 1] = mat @ states[ell]
        return states

    def output_p1(self, g: Mapping[int, int]) -> float:
        """Probability of measuring 1 in the answer register at the end."""
        final = self.run(g)[self.length]
        mass = 0.0
        for i in range(self.n + 1):
            for y in range(self.n_y):
                mass += abs(final[self.basis_index(i, 1, y)]) ** 2
        return float(mass)

    def index_mass(self, state: np.ndarray, i: int) -> float:
        total = 0.0
        for b in (0, 1):
            for y in range(self.n_y):
                total += abs(state[self.basis_index(i, b, y)]) ** 2
        return float(total)


@dataclass(frozen=True)
class QueryWeights:
    """Per-query and averaged query weights of the outer algorithm."""

    q: dict                  # (l, i) -> weight, for l in queries
    qbar: dict               # i -> average over queries, i in 1..n
    rest_mass: float         # average weight parked on i = 0 during queries
    n_queries: int

    def total_mass(self) -> float:
        return float(sum(self.qbar.values()) + self.rest_mass)

    def t_avg(self, sub: VariableTimeSubroutine) -> float:
        return float(sum(self.qbar[i] *
                         sub.stopping_profile(sub.inputs[i - 1]).mean()
                         for i in self.qbar))

    def eps_avg(self, sub: VariableTimeSubroutine) -> float:
        return float(sum(self.qbar[i] *
                         sub.stopping_profile(sub.inputs[i - 1]).total_error()
                         for i in self.qbar))


def query_weights(outer: OuterAlgorithm, g: Mapping[int, int],
                  states: np.ndarray | None = None) -> QueryWeights:
    """q_{i,l} = |(|i><i| (x) I) w_O^l|^2 averaged over the query steps."""
    if not outer.queries:
        raise CompositionError("outer algorithm makes no queries")
    if states is None:
        states = outer.run(g)
    q = {}
    rest = 0.0
    for ell in outer.queries:
        rest += outer.index_mass(states[ell], 0)
        for i in range(1, outer.n + 1):
            q[(ell, i)] = outer.index_mass(states[ell], i)
    qbar = {i: sum(q[(ell, i)] for ell in outer.queries) / len(outer.queries)
            for i in range(1, outer.n + 1)}
    weights = QueryWeights(q, qbar, rest / len(outer.queries),
                           len(outer.queries))
    if abs(weights.total_mass() - 1.0) > outer.config.tol_construct:
        raise CompositionError(
            f"query mass accounts to {weights.total_mass()}, not 1")
    return weights


def composition_parameters(length: int, n_queries: int, t_avg: float,
                           eps_outer: float, eps_avg: float = 0.0,
                           eta: float = DEFAULT.eta) -> dict:
    """Closed-form parameter setting of the composition framework.

    w0 = 1/(L+1+2Q(T_avg+1)), w_{1,out} = (1-eps_O) w0 / 8,
    w_{0,out} = eps_O w0 / 8 (floored when the outer algorithm is exact),
    C- = 4 (L+1+2Q(T_avg+1))^2, and the subroutine error condition
    eps_avg <= eta / (Q (L + Q T_avg)).
    """
    denom = length + 1 + 2 * n_queries * (t_avg + 1)
    w0 = 1.0 / denom
    w1_out = (1.0 - eps_outer) * w0 / 8.0
    w0_out = eps_outer * w0 / 8.0
    floored = False
    if w0_out < 1e-6 * w0:
        w0_out = 1e-6 * w0
        floored = True
    threshold = eta / (n_queries * (length + n_queries * t_avg))
    return {
        "w0": w0, "w1_out": w1_out, "w0_out": w0_out,
        "c_minus": 4.0 * denom ** 2, "c_plus": 18.0,
        "T_avg": t_avg, "eps_avg": eps_avg, "Q": n_queries, "L": length,
        "error_threshold": threshold,
        "error_condition_ok": eps_avg <= threshold,
        "error_condition_ratio": eps_avg / threshold if threshold > 0 else np.inf,
        "w0_out_floored": floored,
        "delta_target": 2.0 * w0 * n_queries * eps_avg,
        "delta_prime_target": (4.0 / w0) * (2.0 * n_queries * eps_avg
                                            + w1_out * eps_outer
                                            + w0_out * (1.0 - eps_outer)),
    }


def set_parameters(outer: OuterAlgorithm, sub: VariableTimeSubroutine,
                   *, eta: float | None = None,
                   config: Config = DEFAULT) -> dict:
    """Measure T_avg and eps_avg for (outer, sub) and set the parameters."""
    eta = config.eta if eta is None else eta
    weights = query_weights(outer, sub.g_by_index())
    return composition_parameters(outer.length, weights.n_queries,
                                  weights.t_avg(sub), outer.eps_outer,
                                  weights.eps_avg(sub), eta)


class _ComposedBasis:
    """Basis of the composed space with scatter helpers.

    Blocks: inner ladders (d in {fwd, bwd}, i in 1..n, inner (a,z) at time t,
    outer tag (b, y, l)); the outer line (perp, i in 0..n, b, y, l); terminal
    slots (circ, i in 1..n, b, y) at l = L; and the single initial slot.
    """

    def __init__(self, outer: OuterAlgorithm, sub: VariableTimeSubroutine):
        self.outer = outer
        self.sub = sub
        self.nt = sub.tmax + 1

        self._inner_sel = {}
        group = [("t0", sub.az_index(0, sub.z_init))]
        self._t_offset = {0: 0}
        for t in range(1, sub.tmax + 1):
            sel = [sub.az_index(a, z) for a in range(sub.n_answers)
                   for s in range(t, sub.tmax + 1) for z in sub.z_block(s)]
            self._inner_sel[t] = np.array(sel, dtype=int)
            self._t_offset[t] = len(group)
            group.extend(("t", t, az) for az in sel)
        self.group_len = len(group)

        n, n_y, length = outer.n, outer.n_y, outer.length
        self._in_base = {}
        pos = 0
        for d in (0, 1):
            for i in range(1, n + 1):
                for b in (0, 1):
                    for y in range(n_y):
                        for ell in range(length + 1):
                            self._in_base[(d, i, b, y, ell)] = pos
                            pos += self.group_len
        self._perp_base = {}
        for i in range(n + 1):
            for b in (0, 1):
                for y in range(n_y):
                    for ell in range(length + 1):
                        self._perp_base[(i, b, y, ell)] = pos
                        pos += 1
        self._out_base = {}
        for i in range(n + 1):
            for b in (0, 1):
                for y in range(n_y):
                    self._out_base[(i, b, y)] = pos
                    pos += 1
        self.init_index = pos
        self.dim = pos + 1

    def perp_index(self, i: int, b: int, y: int, ell: int) -> int:
        return self._perp_base[(i, b, y, ell)]

    def out_index(self, i: int, b: int, y: int) -> int:
        return self._out_base[(i, b, y)]

    def scatter_inner(self, vec: np.ndarray, d: int, i: int, inner: np.ndarray,
                      t: int, b: int, y: int, ell: int,
                      coeff: complex = 1.0) -> None:
        base = self._in_base[(d, i, b, y, ell)]
        if t == 0:
            vec[base] += coeff * inner[self.sub.az_index(0, self.sub.z_init)]
            leak = (np.linalg.norm(inner) ** 2
                    - abs(inner[self.sub.az_index(0, self.sub.z_init)]) ** 2)
            if leak > 1e-14:
                raise CompositionError("t=0 inner state off the initial pair")
            return
        sel = self._inner_sel[t]
        restricted = inner[sel]
        vec[base + self._t_offset[t]:
            base + self._t_offset[t] + len(sel)] += coeff * restricted

    def scatter_outer(self, vec: np.ndarray, outer_vec: np.ndarray, ell: int,
                      coeff: complex = 1.0) -> None:
        """vec += coeff |perp>(outer_vec)|ell>."""
        for i in range(self.outer.n + 1):
            for b in (0, 1):
                for y in range(self.outer.n_y):
                    amp = outer_vec[self.outer.basis_index(i, b, y)]
                    if amp != 0.0:
                        vec[self.perp_index(i, b, y, ell)] += coeff * amp


class ComposedInstance:
    """Phase-estimation instance for the outer/inner composition."""

    def __init__(self, outer: OuterAlgorithm, sub: VariableTimeSubroutine,
                 ext: ReversibleExtension | None, w0: float, w1_out: float,
                 w0_out: float, *, config: Config = DEFAULT):
        if w1_out <= w0_out:
            raise CompositionError("w_{1,out} must exceed w_{0,out}")
        if sub.n_answers != 2:
            raise CompositionError("inner answers must be bits")
        if len(sub.inputs) != outer.n:
            raise CompositionError("inner subroutine must cover 1..n")
        self.config = config
        self.outer = outer
        self.sub = sub
        self.ext = phase_extension(sub) if ext is None else ext
        self.w0, self.w1_out, self.w0_out = float(w0), float(w1_out), float(w0_out)
        self.g = sub.g_by_index()

        self.basis = _ComposedBasis(outer, sub)
        if self.basis.dim > config.max_dim:
            raise CompositionError(f"composed dimension {self.basis.dim} "
                                   f"exceeds cap {config.max_dim}")
        self.outer_states = outer.run(self.g)
        self.weights = query_weights(outer, self.g, self.outer_states)

        self._build_states()
        gram = max(_linalg.gram_offdiag_max(self._psi_a),
                   _linalg.gram_offdiag_max(self._psi_b))
        if gram > config.tol_state:
            raise CompositionError(f"bucket orthogonality fails at {gram:.2e}")
        self.bucket_gram_offdiag = gram

        psi0 = np.zeros(self.basis.dim, dtype=complex)
        psi0[self.basis.init_index] = 1.0
        self.pe = PhaseEstimationInstance(psi0, self._psi_a, self._psi_b,
                                          require_psi0_orthogonal=False,
                                          config=config)

    @property
    def dimension(self) -> int:
        return self.basis.dim

    # -- state families -------------------------------------------------------

    def _outer_transition(self, i, b, y, ell) -> np.ndarray:
        vec = np.zeros(self.basis.dim, dtype=complex)
        vec[self.basis.perp_index(i, b, y, ell)] += 1.0
        src = np.zeros(self.outer.dim, dtype=complex)
        src[self.outer.basis_index(i, b, y)] = 1.0
        moved = self.outer.steps[ell] @ src
        self.basis.scatter_outer(vec, moved, ell + 1, -1.0)
        return vec

    def _connect_in(self, i, b, y, ell) -> np.ndarray:
        vec = np.zeros(self.basis.dim, dtype=complex)
        vec[self.basis.perp_index(i, b, y, ell)] += 1.0
        init = self.sub.initial_state()
        self.basis.scatter_inner(vec, 0, i, init, 0, b, y, ell, -1.0)
        return vec

    def _connect_out(self, i, b, y, ell) -> np.ndarray:
        vec = np.zeros(self.basis.dim, dtype=complex)
        init = self.sub.initial_state()
        self.basis.scatter_inner(vec, 1, i, init, 0, b, y, ell, +1.0)
        vec[self.basis.perp_index(i, b, y, ell + 1)] -= 1.0
        return vec

    def _pass_through(self, b, y, ell) -> np.ndarray:
        """Resting-index bridge across a query step (the oracle fixes i = 0)."""
        vec = np.zeros(self.basis.dim, dtype=complex)
        vec[self.basis.perp_index(0, b, y, ell)] += 1.0
        vec[self.basis.perp_index(0, b, y, ell + 1)] -= 1.0
        return vec

    def _terminal(self, i, b, y) -> np.ndarray:
        vec = np.zeros(self.basis.dim, dtype=complex)
        vec[self.basis.perp_index(i, b, y, self.outer.length)] += 1.0
        w_out = self.w1_out if b == 1 else self.w0_out
        vec[self.basis.out_index(i, b, y)] -= math.sqrt(w_out)
        return vec

    def _initial_transition(self) -> np.ndarray:
        vec = np.zeros(self.basis.dim, dtype=complex)
        vec[self.basis.init_index] += math.sqrt(self.w0)
        vec[self.basis.perp_index(0, 0, 0, 0)] -= 1.0
        return vec

    def _inner_states(self, k: int, b, y, ell, parity: int) -> list[np.ndarray]:
        """Transition states of input k (+1 = outer index) at tag (b, y, ell)."""
        sub, basis = self.sub, self.basis
        i = k + 1
        sign_g = (-1.0) ** sub.g[sub.inputs[k]]
        out = []
        init = sub.initial_state()
        for t in range(sub.tmax):
            if t % 2 != parity:
                continue
            u_next = sub.unitary(t + 1, sub.inputs[k])
            pairs = ([(0, sub.z_init)] if t == 0 else
                     [(a, z) for a in range(sub.n_answers)
                      for s in range(t + 1, sub.tmax + 1)
                      for z in sub.z_block(s)])
            for a, z in pairs:
                e_az = np.zeros(sub.dim, dtype=complex)
                e_az[sub.az_index(a, z)] = 1.0
                moved = u_next @ e_az
                for d, sgn in ((0, 1.0), (1, sign_g)):
                    vec = np.zeros(basis.dim, dtype=complex)
                    basis.scatter_inner(vec, d, i, e_az, t, b, y, ell, sgn)
                    basis.scatter_inner(vec, d, i, moved, t + 1, b, y, ell, -sgn)
                    out.append(vec)
        for t in range(1, sub.tmax + 1):
            if t % 2 != parity:
                continue
            for z in sub.z_block(t):
                for a in range(sub.n_answers):
                    e_az = np.zeros(sub.dim, dtype=complex)
                    e_az[sub.az_index(a, z)] = 1.0
                    vec = np.zeros(basis.dim, dtype=complex)
                    basis.scatter_inner(vec, 0, i, e_az, t, b, y, ell, 1.0)
                    basis.scatter_inner(vec, 1, i, e_az, t, b, y, ell,
                                        -((-1.0) ** a))
                    out.append(vec)
        return out

    def _build_states(self) -> None:
        outer, basis = self.outer, self.basis
        bucket_a: list = []
        bucket_b: list = []
        queries = set(outer.queries)
        tags = [(b, y) for b in (0, 1) for y in range(outer.n_y)]

        for ell in range(outer.length):
            if ell in queries:
                for i in range(1, outer.n + 1):
                    for b, y in tags:
                        bucket_a.append(self._connect_in(i, b, y, ell))
                        bucket_a.append(self._connect_out(i, b, y, ell))
                for b, y in tags:
                    bucket_a.append(self._pass_through(b, y, ell))
                for k in range(outer.n):
                    for b, y in tags:
                        bucket_a.extend(self._inner_states(k, b, y, ell, 1))
                        bucket_b.extend(self._inner_states(k, b, y, ell, 0))
            else:
                target = bucket_a if ell % 2 == 0 else bucket_b
                for i in range(outer.n + 1):
                    for b, y in tags:
                        target.append(self._outer_transition(i, b, y, ell))
        for i in range(outer.n + 1):
            for b, y in tags:
                bucket_a.append(self._terminal(i, b, y))
        bucket_b.append(self._initial_transition())

        self._psi_a = _linalg.as_column_matrix(bucket_a, basis.dim)
        self._psi_b = _linalg.as_column_matrix(bucket_b, basis.dim)

    # -- history-state embeddings -------------------------------------------------

    def _history(self, k: int, b, y, ell, positive: bool) -> np.ndarray:
        sub, basis = self.sub, self.basis
        i = k + 1
        sign_g = (-1.0) ** sub.g[sub.inputs[k]]
        states = sub.algorithm_states(sub.inputs[k])
        vec = np.zeros(basis.dim, dtype=complex)
        for t in range(sub.tmax + 1):
            weight = 1.0 if positive else (-1.0) ** t
            inner = weight * states[t]
            basis.scatter_inner(vec, 0, i, inner, t, b, y, ell)
            basis.scatter_inner(vec, 1, i, inner, t, b, y, ell,
                                sign_g if positive else -sign_g)
        return vec

    def _inner_spike(self, k: int, b, y, ell) -> np.ndarray:
        sub, basis = self.sub, self.basis
        vec = np.zeros(basis.dim, dtype=complex)
        init = sub.initial_state()
        sign_g = (-1.0) ** sub.g[sub.inputs[k]]
        basis.scatter_inner(vec, 0, k + 1, init, 0, b, y, ell, 1.0)
        basis.scatter_inner(vec, 1, k + 1, init, 0, b, y, ell, -sign_g)
        return vec

    # -- witnesses -------------------------------------------------------------------

    def build_positive_witness(self) -> WitnessCertificate:
        """History-state witness for f(g) = 1."""
        outer, basis = self.outer, self.basis
        w = np.zeros(basis.dim, dtype=complex)
        w[basis.init_index] = 1.0 / math.sqrt(self.w0)
        for ell in range(outer.length + 1):
            basis.scatter_outer(w, self.outer_states[ell], ell)
        for ell in outer.queries:
            for k in range(outer.n):
                for b in (0, 1):
                    for y in range(outer.n_y):
                        beta = self.outer_states[ell][
                            outer.basis_index(k + 1, b, y)]
                        if beta != 0.0:
                            w += beta * self._history(k, b, y, ell, True)
        final = self.outer_states[outer.length]
        for i in range(outer.n + 1):
            for b in (0, 1):
                w_out = self.w1_out if b == 1 else self.w0_out
                for y in range(outer.n_y):
                    beta = final[outer.basis_index(i, b, y)]
                    if beta != 0.0:
                        w[basis.out_index(i, b, y)] += beta / math.sqrt(w_out)

        cert = verify_positive_witness(self.pe, w)
        pars = self._parameter_view()
        cert.extras.update({
            "c_plus_bound": 1.0 + self.w0 * (
                outer.length + 1 + 2 * pars["Q"] * (pars["T_avg"] + 1)
                + outer.eps_outer / self.w0_out
                + (1.0 - outer.eps_outer) / self.w1_out),
            "delta_bound": 2.0 * self.w0 * pars["Q"] * pars["eps_avg"],
            "psi0_overlap_expected": 1.0 / math.sqrt(self.w0),
        })
        return cert

    def _tilde_witnesses(self) -> tuple[np.ndarray, np.ndarray]:
        outer, basis = self.outer, self.basis
        dim = basis.dim
        tilde_a = np.zeros(dim, dtype=complex)
        tilde_b = np.zeros(dim, dtype=complex)
        queries = set(outer.queries)
        for ell in range(outer.length):
            if ell in queries:
                for k in range(outer.n):
                    i = k + 1
                    sign_g = (-1.0) ** self.g[i]
                    for b in (0, 1):
                        for y in range(outer.n_y):
                            beta = self.outer_states[ell][
                                outer.basis_index(i, b, y)]
                            if beta == 0.0:
                                continue
                            tilde_a += beta * (
                                self._connect_in(i, b, y, ell)
                                + sign_g * self._connect_out(i, b, y, ell)
                                - self._history(k, b, y, ell, False)
                                + self._inner_spike(k, b, y, ell))
                            tilde_b += beta * self._history(k, b, y, ell, False)
                for b in (0, 1):
                    for y in range(outer.n_y):
                        beta = self.outer_states[ell][outer.basis_index(0, b, y)]
                        if beta != 0.0:
                            tilde_a += beta * self._pass_through(b, y, ell)
            else:
                target = tilde_a if ell % 2 == 0 else tilde_b
                for i in range(outer.n + 1):
                    for b in (0, 1):
                        for y in range(outer.n_y):
                            beta = self.outer_states[ell][
                                outer.basis_index(i, b, y)]
                            if beta != 0.0:
                                target += beta * self._outer_transition(i, b, y, ell)
        return tilde_a, tilde_b

    def build_negative_witness(self) -> WitnessCertificate:
        """Outer-line witness pair for f(g) = 0."""
        outer, basis = self.outer, self.basis
        tilde_a, tilde_b = self._tilde_witnesses()
        scale = 1.0 / math.sqrt(self.w0)

        w_a = tilde_a.copy()
        basis.scatter_outer(w_a, self.outer_states[outer.length], outer.length)
        w_a *= scale
        w_b = scale * (self._initial_transition() + tilde_b)

        cert = verify_negative_witness(self.pe, w_a, w_b)
        pars = self._parameter_view()
        residual_a = tilde_a - self.pe.project_a(tilde_a)
        residual_b = tilde_b - self.pe.project_b(tilde_b)
        cert.extras.update({
            "c_minus_bound": (4.0 / self.w0) * (
                outer.length + 2 * pars["Q"] * (pars["T_avg"] + 1) + 1),
            "delta_prime_bound": (4.0 / self.w0) * (
                2.0 * pars["Q"] * pars["eps_avg"]
                + self.w1_out * outer.eps_outer
                + self.w0_out * (1.0 - outer.eps_outer)),
            "tilde_a_residual": float(np.vdot(residual_a, residual_a).real),
            "tilde_b_residual": float(np.vdot(residual_b, residual_b).real),
            "tilde_residual_bound": 2.0 * pars["Q"] * pars["eps_avg"],
        })
        return cert

    def _parameter_view(self) -> dict:
        return {"Q": self.weights.n_queries,
                "T_avg": self.weights.t_avg(self.sub),
                "eps_avg": self.weights.eps_avg(self.sub)}


def assemble_composed(outer: OuterAlgorithm, sub: VariableTimeSubroutine,
                      ext: ReversibleExtension | None = None,
                      w0: float | None = None, w1_out: float | None = None,
                      w0_out: float | None = None, *,
                      config: Config = DEFAULT) -> ComposedInstance:
    if None in (w0, w1_out, w0_out):
        pars = set_parameters(outer, sub, config=config)
        w0 = pars["w0"] if w0 is None else w0
        w1_out = pars["w1_out"] if w1_out is None else w1_out
        w0_out = pars["w0_out"] if w0_out is None else w0_out
    return ComposedInstance(outer, sub, ext, w0, w1_out, w0_out, config=config)


def decide_composed(outer: OuterAlgorithm, sub: VariableTimeSubroutine,
                    ext: ReversibleExtension | None = None, *,
                    mode: str = "spectral", seed: int = 0,
                    eta: float | None = None,
                    config: Config = DEFAULT) -> tuple[int, dict]:
    """Assemble, set parameters, and decide f(g); returns (bit, diagnostics)."""
    pars = set_parameters(outer, sub, eta=eta, config=config)
    inst = ComposedInstance(outer, sub, ext, pars["w0"], pars["w1_out"],
                            pars["w0_out"], config=config)
    decision = decide(inst.pe, pars["c_minus"], c_plus_bound=pars["c_plus"],
                      mode=mode, seed=seed)
    diagnostics = {
        "parameters": pars,
        "decision": decision.label,
        "m_delta": decision.m_delta,
        "margin": decision.diagnostics["margin"],
        "dimension": inst.dimension,
        "qbar": inst.weights.qbar,
        "cost_estimate": (pars["L"] + pars["Q"] * pars["T_avg"])
        * max(1.0, math.log2(pars["L"] * (sub.tmax + 1))),
        "outer_output_p1": outer.output_p1(sub.g_by_index()),
    }
    return (1 if decision.positive else 0), diagnostics
