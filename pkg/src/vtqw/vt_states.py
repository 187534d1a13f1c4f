"""Transition states, history states, and their orthogonality checkers.

States live in span{|d>|slot>|a,z>|t>} with direction d in {forward(0),
backward(1)}, a location slot from the reversible extension, the subroutine's
answer-workspace pair, and a time register t = 0..T. Indexing is
lexicographic in (d, slot, a, z, t) so dumped test vectors are reproducible
bit for bit.

For a weight sequence alpha (alpha_0 = 1, alpha_t > 0) and each input i:

* forward states, t in 0..T-1, z in Z_{>t}:
  |fwd> = |0>|i>(sqrt(a_t)|a,z>|t> - sqrt(a_{t+1}) U_{t+1}|a,z>|t+1>)
* backward states: the same inner part behind |1>(A|i>),
* reversal states, t in 1..T, z in Z_t:
  sqrt(a_t)(|0>|i> - |1>(A_a|i>))|a,z>|t>.

Bucket Psi_0 collects the even-t sets, Psi_1 the odd-t sets; each bucket is
pairwise orthogonal and their overlap graph is a ladder per input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _linalg
from .config import DEFAULT, Config
from .subroutine import (ReversibleExtension, SubroutineError,
                         VariableTimeSubroutine, check_alpha)

FORWARD, BACKWARD, REVERSAL = "forward", "backward", "reversal"


@dataclass(frozen=True)
class StateKey:
    kind: str
    input_index: int
    t: int
    a: int
    z: int


class StateSpace:
    """Index bookkeeping for span{|d>|slot>|a,z>|t>}."""

    def __init__(self, sub: VariableTimeSubroutine, slot_dim: int):
        self.sub = sub
        self.slot_dim = slot_dim
        self.inner_dim = sub.dim
        self.nt = sub.tmax + 1
        self.dim = 2 * slot_dim * self.inner_dim * self.nt

    def slice_for(self, d: int, slot: int, t: int) -> slice:
        """Ambient indices of the inner space at fixed (d, slot, t)."""
        base = ((d * self.slot_dim + slot) * self.inner_dim) * self.nt + t
        return slice(base, base + self.inner_dim * self.nt, self.nt)

    def scatter(self, vec: np.ndarray, d: int, slot_vec, inner: np.ndarray,
                t: int, coeff: complex = 1.0) -> None:
        """vec += coeff * |d>(slot_vec)(inner)|t> in place."""
        if np.isscalar(slot_vec):
            vec[self.slice_for(d, int(slot_vec), t)] += coeff * inner
            return
        for s in np.nonzero(np.abs(slot_vec) > 0.0)[0]:
            vec[self.slice_for(d, int(s), t)] += coeff * slot_vec[s] * inner


class TransitionStateSet:
    """All transition states of a subroutine, bucketed by time parity."""

    def __init__(self, sub: VariableTimeSubroutine, ext: ReversibleExtension,
                 alpha: Sequence[float], *, t0_full: bool = True,
                 config: Config = DEFAULT):
        self.sub = sub
        self.ext = ext
        self.config = config
        self.alpha = check_alpha(alpha, sub.tmax)
        self.t0_full = t0_full
        self.space = StateSpace(sub, ext.slot_dim)
        if self.space.dim > config.max_dim:
            raise SubroutineError(f"state space dimension {self.space.dim} "
                                  f"exceeds cap {config.max_dim}")
        self.keys: list[StateKey] = []
        self.columns: list[np.ndarray] = []
        self._build()
        self._matrix = _linalg.as_column_matrix(self.columns, self.space.dim)
        self._bucket_basis: dict = {}

    # -- construction ------------------------------------------------------

    def _t0_pairs(self):
        if self.t0_full:
            return [(a, z) for a in range(self.sub.n_answers)
                    for z in range(self.sub.nz)]
        return [(0, self.sub.z_init)]

    def _inner_pairs(self, t: int):
        """(a, z) with z in Z_{>t}; at t=0 optionally just the initial pair."""
        if t == 0:
            return self._t0_pairs()
        zs = [z for s in range(t + 1, self.sub.tmax + 1)
              for z in self.sub.z_block(s)]
        return [(a, z) for a in range(self.sub.n_answers) for z in zs]

    def _build(self) -> None:
        sub, ext, sp = self.sub, self.ext, self.space
        sqrt_a = np.sqrt(self.alpha)
        for i_idx in range(len(sub.inputs)):
            inp = sub.inputs[i_idx]
            tail = ext.input_slots[i_idx]
            image = ext.image_vector(i_idx)
            for t in range(sub.tmax):
                u_next = sub.unitary(t + 1, inp)
                for a, z in self._inner_pairs(t):
                    e_az = np.zeros(sp.inner_dim, dtype=complex)
                    e_az[sub.az_index(a, z)] = 1.0
                    moved = u_next @ e_az
                    for kind, d, slot in ((FORWARD, 0, tail), (BACKWARD, 1, image)):
                        vec = np.zeros(sp.dim, dtype=complex)
                        sp.scatter(vec, d, slot, e_az, t, sqrt_a[t])
                        sp.scatter(vec, d, slot, moved, t + 1, -sqrt_a[t + 1])
                        self.keys.append(StateKey(kind, i_idx, t, a, z))
                        self.columns.append(vec)
            for t in range(1, sub.tmax + 1):
                for z in sub.z_block(t):
                    for a in range(sub.n_answers):
                        e_az = np.zeros(sp.inner_dim, dtype=complex)
                        e_az[sub.az_index(a, z)] = 1.0
                        rotated = ext.a_controlled[a] @ ext.input_vector(i_idx)
                        vec = np.zeros(sp.dim, dtype=complex)
                        sp.scatter(vec, 0, tail, e_az, t, sqrt_a[t])
                        sp.scatter(vec, 1, rotated, e_az, t, -sqrt_a[t])
                        self.keys.append(StateKey(REVERSAL, i_idx, t, a, z))
                        self.columns.append(vec)

    # -- access --------------------------------------------------------------

    def bucket_parity(self, key: StateKey) -> int:
        """Every state set at time t joins the bucket of parity t mod 2."""
        return key.t % 2

    def bucket_columns(self, b: int) -> np.ndarray:
        cols = [c for k, c in zip(self.keys, self.columns)
                if self.bucket_parity(k) == b]
        return _linalg.as_column_matrix(cols, self.space.dim)

    def bucket_keys(self, b: int) -> list[StateKey]:
        return [k for k in self.keys if self.bucket_parity(k) == b]

    def bucket_basis(self, b: int) -> np.ndarray:
        if b not in self._bucket_basis:
            self._bucket_basis[b] = _linalg.orthonormal_columns(
                self.bucket_columns(b), self.config.gram_drop_tol)
        return self._bucket_basis[b]

    def bucket_project(self, b: int, vec: np.ndarray) -> np.ndarray:
        q = self.bucket_basis(b)
        return q @ (q.conj().T @ vec)

    def bucket_gram_offdiag(self, b: int) -> float:
        return _linalg.gram_offdiag_max(self.bucket_columns(b))

    def set_matrix(self, i_idx: int, t: int, kind: str) -> np.ndarray:
        cols = [c for k, c in zip(self.keys, self.columns)
                if (k.input_index, k.t, k.kind) == (i_idx, t, kind)]
        return _linalg.as_column_matrix(cols, self.space.dim)

    def reflect_about_bucket(self, b: int) -> np.ndarray:
        """Explicit unitary 2 Pi_{Psi_b} - I."""
        q = self.bucket_basis(b)
        return 2.0 * (q @ q.conj().T) - np.eye(self.space.dim, dtype=complex)


class HistoryStates:
    """Positive and negative history states |w_+(i)>, |w_-(i)>."""

    def __init__(self, sub: VariableTimeSubroutine, ext: ReversibleExtension,
                 alpha: Sequence[float], *, config: Config = DEFAULT):
        self.sub = sub
        self.ext = ext
        self.config = config
        self.alpha = check_alpha(alpha, sub.tmax)
        self.space = StateSpace(sub, ext.slot_dim)
        self._w_t = {i: sub.algorithm_states(inp)
                     for i, inp in enumerate(sub.inputs)}

    def algorithm_state(self, i_idx: int, t: int) -> np.ndarray:
        return self._w_t[i_idx][t]

    def _assemble(self, i_idx: int, weights: np.ndarray, sign: float) -> np.ndarray:
        sp = self.space
        tail = self.ext.input_slots[i_idx]
        image = self.ext.image_vector(i_idx)
        vec = np.zeros(sp.dim, dtype=complex)
        for t in range(self.sub.tmax + 1):
            inner = weights[t] * self._w_t[i_idx][t]
            sp.scatter(vec, 0, tail, inner, t)
            sp.scatter(vec, 1, image, inner, t, sign)
        return vec

    def positive(self, i_idx: int) -> np.ndarray:
        """(|0>|i> + |1>A|i>) sum_t alpha_t^{-1/2} |w^t(i)>|t>."""
        return self._assemble(i_idx, 1.0 / np.sqrt(self.alpha), +1.0)

    def negative(self, i_idx: int) -> np.ndarray:
        """(|0>|i> - |1>A|i>) sum_t (-1)^t alpha_t^{1/2} |w^t(i)>|t>."""
        signs = (-1.0) ** np.arange(self.sub.tmax + 1)
        return self._assemble(i_idx, signs * np.sqrt(self.alpha), -1.0)

    def initial_spike(self, i_idx: int) -> np.ndarray:
        """(|0>|i> - |1>A|i>)|0, z_init>|0>, the t=0 part of |w_-(i)>."""
        sp = self.space
        vec = np.zeros(sp.dim, dtype=complex)
        inner = self.sub.initial_state()
        sp.scatter(vec, 0, self.ext.input_slots[i_idx], inner, 0)
        sp.scatter(vec, 1, self.ext.image_vector(i_idx), inner, 0, -1.0)
        return vec

    def norms_expected(self, i_idx: int) -> tuple[float, float]:
        """Closed forms (|w_-|^2, |w_+|^2) = 2 E[sum a_t], 2 E[sum 1/a_t]."""
        prof = self.sub.stopping_profile(self.sub.inputs[i_idx])
        return (2.0 * prof.expect_sum(self.alpha),
                2.0 * prof.expect_sum_inverse(self.alpha))


def build_transition_states(sub, ext, alpha, *, t0_full: bool = True,
                            config: Config = DEFAULT) -> TransitionStateSet:
    return TransitionStateSet(sub, ext, alpha, t0_full=t0_full, config=config)


def build_history_states(sub, ext, alpha, *, config: Config = DEFAULT) -> HistoryStates:
    return HistoryStates(sub, ext, alpha, config=config)


# -- verification -------------------------------------------------------------

@dataclass(frozen=True)
class ResidualReport:
    residuals: dict
    bounds: dict
    tol: float

    @property
    def passed(self) -> bool:
        for name, value in self.residuals.items():
            limit = self.bounds.get(name, 0.0) + self.tol
            if value > limit:
                return False
        return True

    def margins(self) -> dict:
        return {name: self.bounds.get(name, 0.0) + self.tol - value
                for name, value in self.residuals.items()}


def verify_positive_orthogonality(states: TransitionStateSet,
                                  hist: HistoryStates) -> ResidualReport:
    """|w_+(i)> against the transition states.

    Exactly orthogonal to every forward/backward state and to reversal
    states with the matching answer or a foreign input; the bucket
    projections are bounded by 2 E[eps^T / alpha_T].
    """
    sub = states.sub
    residuals, bounds = {}, {}
    mat = states._matrix
    for i_idx, inp in enumerate(sub.inputs):
        w = hist.positive(i_idx)
        overlaps = np.abs(mat.conj().T @ w)
        worst = 0.0
        for k, ov in zip(states.keys, overlaps):
            exempt = (k.kind == REVERSAL and k.input_index == i_idx
                      and k.a != sub.g[inp])
            if not exempt:
                worst = max(worst, float(ov))
        residuals[f"overlap[{inp!r}]"] = worst
        bounds[f"overlap[{inp!r}]"] = 0.0

        prof = sub.stopping_profile(inp)
        cap = 2.0 * prof.expect_at_stop(1.0 / states.alpha)
        for b in (0, 1):
            proj = states.bucket_project(b, w)
            residuals[f"bucket{b}[{inp!r}]"] = float(np.vdot(proj, proj).real)
            bounds[f"bucket{b}[{inp!r}]"] = cap
    return ResidualReport(residuals, bounds, states.config.tol_state)


def verify_negative_projection(states: TransitionStateSet,
                               hist: HistoryStates) -> ResidualReport:
    """|w_-(i)> against the bucket spans.

    The part outside Psi_0, and the part of |w_-(i)> minus its t=0 spike
    outside Psi_1, are both bounded by 2 E[alpha_T eps^T].
    """
    sub = states.sub
    residuals, bounds = {}, {}
    for i_idx, inp in enumerate(sub.inputs):
        w = hist.negative(i_idx)
        prof = sub.stopping_profile(inp)
        cap = 2.0 * prof.expect_at_stop(states.alpha)

        out0 = w - states.bucket_project(0, w)
        residuals[f"outside_psi0[{inp!r}]"] = float(np.vdot(out0, out0).real)
        bounds[f"outside_psi0[{inp!r}]"] = cap

        shifted = w - hist.initial_spike(i_idx)
        out1 = shifted - states.bucket_project(1, shifted)
        residuals[f"outside_psi1[{inp!r}]"] = float(np.vdot(out1, out1).real)
        bounds[f"outside_psi1[{inp!r}]"] = cap
    return ResidualReport(residuals, bounds, states.config.tol_state)


# -- overlap structure --------------------------------------------------------

def ladder_adjacency_expected(states: TransitionStateSet) -> set:
    """Set-level edges allowed by the ladder overlap graph (per input)."""
    sub = states.sub
    allowed = set()

    def node(i, t, kind):
        return (i, t, kind)

    for i in range(len(sub.inputs)):
        for t in range(sub.tmax):
            for kind in (FORWARD, BACKWARD):
                if t + 1 < sub.tmax:
                    allowed.add(frozenset((node(i, t, kind), node(i, t + 1, kind))))
                allowed.add(frozenset((node(i, t, kind), node(i, t + 1, REVERSAL))))
    return allowed


def overlap_adjacency(states: TransitionStateSet, tol: float = 1e-12) -> set:
    """Observed set-level adjacency from pairwise inner products."""
    groups: dict = {}
    for k, c in zip(states.keys, states.columns):
        groups.setdefault((k.input_index, k.t, k.kind), []).append(c)
    names = list(groups)
    mats = {g: _linalg.as_column_matrix(groups[g], states.space.dim)
            for g in names}
    edges = set()
    for a_pos, ga in enumerate(names):
        for gb in names[a_pos + 1:]:
            ip = np.abs(mats[ga].conj().T @ mats[gb])
            if ip.size and float(ip.max()) > tol:
                edges.add(frozenset((ga, gb)))
    return edges


# -- golden-file dump ----------------------------------------------------------

def dump_state_set(states: TransitionStateSet, tol: float = 0.0) -> dict:
    """JSON-ready dump: per state, its key and (index, re, im) amplitudes."""
    out = []
    for key, col in zip(states.keys, states.columns):
        nz = np.nonzero(np.abs(col) > tol)[0]
        out.append({
            "kind": key.kind,
            "input": key.input_index,
            "t": key.t,
            "a": key.a,
            "z": key.z,
            "amplitudes": [[int(j), float(col[j].real), float(col[j].imag)]
                           for j in nz],
        })
    return {"indexing": "lexicographic (d, slot, a, z, t)",
            "dimension": states.space.dim,
            "states": out}
