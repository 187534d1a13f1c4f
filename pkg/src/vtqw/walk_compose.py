"""Assembles quantum-walk phase-estimation instances with edge composition.

Given a network G, disjoint vertex sets V0 and V_M with a marked subset M,
an initial distribution sigma on V0, and a reversible variable-time
subroutine implementing the edge transitions, this module builds:

* the augmented graph G' (a virtual source connected to V0 with weights
  w0 sigma(u) and to M with weight wM),
* star states with positive amplitude on outgoing labels and negative on
  incoming ones,
* the transition-state ladders of the subroutine, one per oriented edge,
* the initial state psi0 supported on the virtual-source slots of V0,

and verifies the positive/negative witnesses and the P/N conditions.

Basis layout: the t = 0 layer holds one slot per (vertex, label) pair with
the direction implied by the orientation (outgoing labels forward, incoming
backward) plus forward virtual slots for V0 and M; every layer t >= 1 holds
both directions on all real slots tensored with answers x Z_{>=t}. The t = 0
transition states are restricted to the initial answer-workspace pair, the
only inner state the t = 0 layer carries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _linalg
from .config import DEFAULT, Config
from .network import Distribution, Flow, Network, NetworkError, total_weight
from .phase_estimation import (Decision, PhaseEstimationInstance,
                               WitnessCertificate, decide,
                               verify_negative_witness,
                               verify_positive_witness)
from .subroutine import (ReversibleExtension, VariableTimeSubroutine,
                         alpha_sequence, check_alpha)


class WalkError(ValueError):
    """Raised when a walk instance or witness input is invalid."""


def walk_extension(net: Network, *, answer_controlled: bool = True) -> ReversibleExtension:
    """Slot-space extension for edge transitions: A|u,i> = |v,j>.

    Slots are ordered (tail_0, head_0, tail_1, head_1, ...) per oriented
    edge. With ``answer_controlled`` the answer selects between identity
    (answer 0) and the edge swap (answer 1), so transition subroutines must
    target answer 1; without it both answers perform the swap, which makes
    the transition reversible regardless of the reported bit (used by the
    search reduction, where the bit is the marked flag).
    """
    n_slots = 2 * len(net.edges)
    swap = np.zeros((n_slots, n_slots), dtype=complex)
    for k in range(len(net.edges)):
        swap[2 * k + 1, 2 * k] = 1.0
        swap[2 * k, 2 * k + 1] = 1.0
    a_map = np.zeros((n_slots, len(net.edges)), dtype=complex)
    for k in range(len(net.edges)):
        a_map[2 * k + 1, k] = 1.0
    first = np.eye(n_slots, dtype=complex) if answer_controlled else swap.copy()
    return ReversibleExtension(n_slots, tuple(2 * k for k in range(len(net.edges))),
                               a_map, (first, swap.copy()))


class _WalkBasis:
    """Explicit basis of the walk space with scatter helpers."""

    def __init__(self, net: Network, virtual_vertices: Sequence,
                 sub: VariableTimeSubroutine):
        self.net = net
        self.sub = sub
        self.n_slots = 2 * len(net.edges)
        self.virtual_vertices = tuple(virtual_vertices)

        index: dict = {}
        entries: list = []

        def add(entry):
            index[entry] = len(entries)
            entries.append(entry)

        # t = 0 layer: direction-consistent slots, initial inner state only
        for k in range(len(net.edges)):
            add(("t0", 0, 2 * k))          # forward, outgoing label of the tail
        for k in range(len(net.edges)):
            add(("t0", 1, 2 * k + 1))      # backward, incoming label of the head
        for u in self.virtual_vertices:
            add(("t0", 0, ("virtual", u)))

        # t >= 1 layers: both directions, all real slots, answers x Z_{>=t}
        self._inner_sel = {}
        self._inner_excluded = {}
        self._layer_base = {}
        for t in range(1, sub.tmax + 1):
            sel = [sub.az_index(a, z) for a in range(sub.n_answers)
                   for s in range(t, sub.tmax + 1) for z in sub.z_block(s)]
            self._inner_sel[t] = np.array(sel, dtype=int)
            self._inner_excluded[t] = np.array(
                sorted(set(range(sub.dim)) - set(sel)), dtype=int)
            for d in (0, 1):
                for slot in range(self.n_slots):
                    self._layer_base[(d, slot, t)] = len(entries)
                    for az in sel:
                        add(("t", d, slot, t, az))

        self.index = index
        self.entries = entries
        self.dim = len(entries)

    def t0_index(self, d: int, slot) -> int:
        return self.index[("t0", d, slot)]

    def scatter_inner(self, vec: np.ndarray, d: int, slot_vec, inner: np.ndarray,
                      t: int, coeff: complex = 1.0) -> None:
        """vec += coeff |d>(slot_vec)(inner)|t>, t >= 1, inner over answers x Z."""
        sel = self._inner_sel[t]
        restricted = inner[sel]
        dropped = np.linalg.norm(inner) ** 2 - np.linalg.norm(restricted) ** 2
        if dropped > 1e-18:
            raise WalkError("inner state leaks outside Z_{>=t}")
        if np.isscalar(slot_vec):
            base = self._layer_base[(d, int(slot_vec), t)]
            vec[base: base + len(sel)] += coeff * restricted
            return
        for s in np.nonzero(np.abs(slot_vec) > 0.0)[0]:
            base = self._layer_base[(d, int(s), t)]
            vec[base: base + len(sel)] += coeff * slot_vec[s] * restricted

    def scatter_t0(self, vec: np.ndarray, d: int, slot, coeff: complex) -> None:
        vec[self.t0_index(d, slot)] += coeff


@dataclass(frozen=True)
class ConditionReport:
    """Measured left-hand sides of the positive/negative conditions."""

    p3: float | None
    p4: float | None
    n1: float
    n2: float
    r_bound: float
    w_bound: float
    ratio_threshold: float

    @property
    def p3_ok(self) -> bool | None:
        return None if self.p3 is None else self.p3 <= self.r_bound * (1 + 1e-12)

    @property
    def p4_ok(self) -> bool | None:
        return None if self.p4 is None else self.p4 * self.w_bound <= self.ratio_threshold

    @property
    def n1_ok(self) -> bool:
        return self.n1 <= self.w_bound * (1 + 1e-12)

    @property
    def n2_ok(self) -> bool:
        return self.n2 * self.r_bound <= self.ratio_threshold

    def as_dict(self) -> dict:
        return {"P3": self.p3, "P4": self.p4, "N1": self.n1, "N2": self.n2,
                "R": self.r_bound, "W": self.w_bound,
                "P3_ok": self.p3_ok, "P4_ok": self.p4_ok,
                "N1_ok": self.n1_ok, "N2_ok": self.n2_ok}


class WalkInstance:
    """Assembled phase-estimation instance for a walk scenario."""

    def __init__(self, net: Network, v0: Iterable, v_marked: Iterable,
                 marked: Iterable, sigma: Distribution,
                 sub: VariableTimeSubroutine, ext: ReversibleExtension,
                 alpha, w0: float, w_marked: float | None = None, *,
                 config: Config = DEFAULT):
        self.config = config
        self.net = net
        self.v0 = tuple(v0)
        self.v_marked = tuple(v_marked)
        self.marked = tuple(marked)
        self.sigma = sigma
        self.sub = sub
        self.ext = ext
        self.alpha = (alpha_sequence(alpha, sub.tmax) if isinstance(alpha, str)
                      else check_alpha(alpha, sub.tmax))
        self.w0 = float(w0)
        self.w_marked = self.w0 if w_marked is None else float(w_marked)

        self._validate_inputs()
        virtuals = [u for u in net.vertices
                    if u in set(self.v0) | set(self.marked)]
        self.basis = _WalkBasis(net, virtuals, sub)
        if self.basis.dim > config.max_dim:
            raise WalkError(f"walk dimension {self.basis.dim} exceeds cap "
                            f"{config.max_dim}")

        self._build_states()
        gram = max(_linalg.gram_offdiag_max(self._psi_a),
                   _linalg.gram_offdiag_max(self._psi_b))
        if gram > config.tol_state:
            raise WalkError(f"bucket orthogonality fails at {gram:.2e}")
        self.bucket_gram_offdiag = gram
        self.pe = PhaseEstimationInstance(self._psi0, self._psi_a, self._psi_b,
                                          require_psi0_orthogonal=False,
                                          config=config)

    # -- construction ---------------------------------------------------------

    def _validate_inputs(self) -> None:
        net = self.net
        vs = set(net.vertices)
        if not set(self.v0) <= vs or not set(self.v_marked) <= vs:
            raise WalkError("V0/V_M contain unknown vertices")
        if set(self.v0) & set(self.v_marked):
            raise WalkError("V0 and V_M must be disjoint")
        if not set(self.marked) <= set(self.v_marked):
            raise WalkError("M must be contained in V_M")
        if not self.sigma.support() <= set(self.v0):
            raise WalkError("sigma must be supported on V0")
        if len(self.sub.inputs) != len(net.edges):
            raise WalkError("subroutine must have one input per oriented edge")
        if self.ext.slot_dim != 2 * len(net.edges):
            raise WalkError("extension slot space must match the edge slots")
        if self.w0 <= 0 or self.w_marked <= 0:
            raise WalkError("w0 and wM must be positive")

    def virtual_weight(self, u) -> float:
        if u in set(self.v0):
            return self.w0 * self.sigma(u)
        return self.w_marked

    def _build_states(self) -> None:
        net, sub, ext, basis = self.net, self.sub, self.ext, self.basis
        sqrt_a = np.sqrt(self.alpha)
        dim = basis.dim

        psi0 = np.zeros(dim, dtype=complex)
        for u in self.v0:
            if self.sigma(u) > 0.0:
                basis.scatter_t0(psi0, 0, ("virtual", u), np.sqrt(self.sigma(u)))
        self._psi0 = psi0

        stars = []
        for u in net.vertices:
            vec = np.zeros(dim, dtype=complex)
            for lab in net.labels(u, +1):
                k, _ = net.edge_of_label(u, lab)
                basis.scatter_t0(vec, 0, 2 * k, np.sqrt(net.edges[k].w))
            for lab in net.labels(u, -1):
                k, _ = net.edge_of_label(u, lab)
                basis.scatter_t0(vec, 1, 2 * k + 1, -np.sqrt(net.edges[k].w))
            if u in set(self.v0) | set(self.marked):
                basis.scatter_t0(vec, 0, ("virtual", u),
                                 np.sqrt(self.virtual_weight(u)))
            stars.append(vec)
        self._stars = stars

        bucket: dict = {0: [], 1: []}
        init_inner = sub.initial_state()
        for k, inp in enumerate(sub.inputs):
            tail, head = 2 * k, 2 * k + 1
            image = ext.image_vector(k)
            for t in range(sub.tmax):
                u_next = sub.unitary(t + 1, inp)
                pairs = ([(0, sub.z_init)] if t == 0 else
                         [(a, z) for a in range(sub.n_answers)
                          for s in range(t + 1, sub.tmax + 1)
                          for z in sub.z_block(s)])
                for a, z in pairs:
                    e_az = np.zeros(sub.dim, dtype=complex)
                    e_az[sub.az_index(a, z)] = 1.0
                    moved = u_next @ e_az
                    for d, slot in ((0, tail), (1, image)):
                        vec = np.zeros(dim, dtype=complex)
                        if t == 0:
                            if d == 0:
                                basis.scatter_t0(vec, 0, tail, sqrt_a[0])
                            else:
                                for s in np.nonzero(np.abs(image) > 0.0)[0]:
                                    basis.scatter_t0(vec, 1, int(s),
                                                     sqrt_a[0] * image[s])
                        else:
                            basis.scatter_inner(vec, d, slot, e_az, t, sqrt_a[t])
                        basis.scatter_inner(vec, d, slot, moved, t + 1,
                                            -sqrt_a[t + 1])
                        bucket[t % 2].append(vec)
            for t in range(1, sub.tmax + 1):
                for z in sub.z_block(t):
                    for a in range(sub.n_answers):
                        e_az = np.zeros(sub.dim, dtype=complex)
                        e_az[sub.az_index(a, z)] = 1.0
                        rotated = ext.a_controlled[a] @ ext.input_vector(k)
                        vec = np.zeros(dim, dtype=complex)
                        basis.scatter_inner(vec, 0, tail, e_az, t, sqrt_a[t])
                        basis.scatter_inner(vec, 1, rotated, e_az, t, -sqrt_a[t])
                        bucket[t % 2].append(vec)

        self._psi_a = _linalg.as_column_matrix(bucket[0], dim)
        self._psi_b = _linalg.as_column_matrix(bucket[1] + stars, dim)

    # -- history states ---------------------------------------------------------

    def _history(self, k: int, positive: bool) -> np.ndarray:
        sub, basis = self.sub, self.basis
        tail = 2 * k
        image = self.ext.image_vector(k)
        states = sub.algorithm_states(sub.inputs[k])
        if positive:
            weights = 1.0 / np.sqrt(self.alpha)
            sign = +1.0
        else:
            weights = np.sqrt(self.alpha) * (-1.0) ** np.arange(sub.tmax + 1)
            sign = -1.0
        vec = np.zeros(basis.dim, dtype=complex)
        init = sub.initial_state()
        amp0 = weights[0] * complex(np.vdot(init, states[0]))
        basis.scatter_t0(vec, 0, tail, amp0)
        for s in np.nonzero(np.abs(image) > 0.0)[0]:
            basis.scatter_t0(vec, 1, int(s), sign * amp0 * image[s])
        for t in range(1, sub.tmax + 1):
            inner = weights[t] * states[t]
            basis.scatter_inner(vec, 0, tail, inner, t)
            basis.scatter_inner(vec, 1, image, inner, t, sign)
        return vec

    def _spike(self, k: int) -> np.ndarray:
        basis = self.basis
        vec = np.zeros(basis.dim, dtype=complex)
        image = self.ext.image_vector(k)
        basis.scatter_t0(vec, 0, 2 * k, 1.0)
        for s in np.nonzero(np.abs(image) > 0.0)[0]:
            basis.scatter_t0(vec, 1, int(s), -image[s])
        return vec

    @property
    def dimension(self) -> int:
        return self.basis.dim

    # -- witnesses ---------------------------------------------------------------

    def build_positive_witness(self, theta: Flow) -> WitnessCertificate:
        """Positive witness from a flow satisfying P1 and P2.

        The flow is extended to a circulation on G' through the virtual
        source; the overall sign is chosen so that <psi0|w> = +1/sqrt(w0).
        """
        if theta.net is not self.net:
            raise WalkError("flow belongs to a different network")
        div = theta.divergence()
        tol = self.config.tol_construct
        allowed = set(self.v0) | set(self.marked)
        for u in self.net.vertices:
            if u not in allowed and abs(div[self.net.index(u)]) > 1e-7:
                raise WalkError(f"P1 violated: flow boundary touches {u!r}")
        src = sum(div[self.net.index(u)] for u in self.v0)
        if abs(src - 1.0) > 1e-7:
            raise WalkError(f"P1 violated: source flow is {src}")
        p2 = sum(div[self.net.index(u)] ** 2 / self.sigma(u)
                 for u in self.v0 if self.sigma(u) > 0.0)
        if not (1.0 / 3.0 - tol <= p2 <= 3.0 + tol):
            raise WalkError(f"P2 violated: sum theta(u)^2/sigma(u) = {p2}")

        w = np.zeros(self.basis.dim, dtype=complex)
        for k, e in enumerate(self.net.edges):
            coeff = theta.values[k] / np.sqrt(e.w)
            if coeff != 0.0:
                w -= coeff * self._history(k, positive=True)
        for u in set(self.v0) | set(self.marked):
            coeff = div[self.net.index(u)] / np.sqrt(self.virtual_weight(u))
            self.basis.scatter_t0(w, 0, ("virtual", u), coeff)

        cert = verify_positive_witness(self.pe, w)
        prof = {k: self.sub.stopping_profile(inp)
                for k, inp in enumerate(self.sub.inputs)}
        ratio = theta.values ** 2 / np.array([e.w for e in self.net.edges])
        delta_bound = 3.0 * self.w0 * sum(
            r * prof[k].expect_at_stop(1.0 / self.alpha)
            for k, r in enumerate(ratio))
        c_plus_bound = 2.0 * self.w0 * sum(
            r * prof[k].expect_sum_inverse(self.alpha)
            for k, r in enumerate(ratio)) + 4.0
        cert.extras.update({
            "delta_bound": delta_bound,
            "c_plus_bound": c_plus_bound,
            "psi0_overlap_expected": 1.0 / np.sqrt(self.w0),
        })
        return cert

    def build_negative_witness(self) -> WitnessCertificate:
        """Negative witness (w_A, w_B); requires M to be empty."""
        if self.marked:
            raise WalkError("negative witness requires M to be empty")
        dim = self.basis.dim
        w_a = np.zeros(dim, dtype=complex)
        w_b = np.zeros(dim, dtype=complex)
        scale = 1.0 / np.sqrt(self.w0)
        for k, e in enumerate(self.net.edges):
            sw = np.sqrt(e.w)
            wm = self._history(k, positive=False)
            w_a -= scale * sw * wm
            w_b -= scale * sw * (self._spike(k) - wm)
        for vec in self._stars:
            w_b += scale * vec
        cert = verify_negative_witness(self.pe, w_a, w_b)
        expected = (2.0 / self.w0) * sum(
            e.w * self.sub.stopping_profile(inp).expect_sum(self.alpha)
            for e, inp in zip(self.net.edges, self.sub.inputs))
        cert.extras.update({"c_minus_expected": expected})
        return cert

    # -- conditions and the decision ----------------------------------------------

    def check_conditions(self, r_bound: float, w_bound: float,
                         theta: Flow | None = None) -> ConditionReport:
        """Numeric P3/P4/N1/N2 with the o(.) conditions as ratio thresholds."""
        profs = [self.sub.stopping_profile(inp) for inp in self.sub.inputs]
        weights = np.array([e.w for e in self.net.edges])
        n1 = float(sum(w * p.expect_sum(self.alpha)
                       for w, p in zip(weights, profs)))
        n2 = float(sum(w * p.expect_at_stop(self.alpha)
                       for w, p in zip(weights, profs)))
        p3 = p4 = None
        if theta is not None:
            ratio = theta.values ** 2 / weights
            p3 = float(sum(r * p.expect_sum_inverse(self.alpha)
                           for r, p in zip(ratio, profs)))
            p4 = float(sum(r * p.expect_at_stop(1.0 / self.alpha)
                           for r, p in zip(ratio, profs)))
        return ConditionReport(p3, p4, n1, n2, float(r_bound), float(w_bound),
                               self.config.ratio_threshold)

    def run(self, r_bound: float, w_bound: float, mode: str = "spectral",
            seed: int = 0) -> tuple[Decision, dict]:
        """Decide M = empty or not; C- = 2 R W, c+ = 6."""
        c_minus = max(2.0 * r_bound * w_bound, 1.0)
        decision = decide(self.pe, c_minus, c_plus_bound=6.0, mode=mode,
                          seed=seed)
        cost = {
            "setup": 1.0,
            "walk_calls": float(np.sqrt(r_bound * w_bound)
                                * max(1.0, np.log2(self.sub.tmax + 1))),
            "c_minus": c_minus,
            "dimension": self.dimension,
        }
        return decision, cost


def assemble(net: Network, v0, v_marked, marked, sigma: Distribution,
             sub: VariableTimeSubroutine, ext: ReversibleExtension,
             alpha, w0: float, w_marked: float | None = None, *,
             config: Config = DEFAULT) -> WalkInstance:
    return WalkInstance(net, v0, v_marked, marked, sigma, sub, ext, alpha,
                        w0, w_marked, config=config)


def path_subdivided_network(net: Network, times: Mapping[int, int]) -> Network:
    """G^T: edge k of weight w becomes a path of (times[k] + 1) edges of weight w.

    With alpha = 1 and deterministic transition times, N1 equals W(G^T) and
    the optimal P3 equals R_{sigma,M}(G^T).
    """
    vertices = list(net.vertices)
    edges = []
    for k, e in enumerate(net.edges):
        hops = int(times[k]) + 1
        chain = [e.u]
        for j in range(hops - 1):
            node = ("path", k, j)
            vertices.append(node)
            chain.append(node)
        chain.append(e.v)
        for a, b in zip(chain[:-1], chain[1:]):
            edges.append((a, b, e.w))
    return Network(vertices, edges)
