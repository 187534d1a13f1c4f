"""Explicit-matrix model of variable-time reversible subroutines.

A subroutine is a sequence of unitaries ``U_1 .. U_T`` (one per input) on
the answer-workspace space, with nested halting subspaces
``{0} = H_0 <= H_1 <= ... <= H_T`` encoded by a partition of the workspace
basis into ``Z_1 .. Z_T`` (some possibly empty). ``U_t`` must leave ``H_{t-1}``
pointwise invariant. Stopping laws, conditional errors, and the weighted
expectations used by the composition frameworks are all derived from the
matrices.

Basis convention: the answer-workspace basis is ``|a, z>`` with index
``a * |Z| + z``. The initial state is ``|answer 0, z_init>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .config import DEFAULT, Config


class SubroutineError(ValueError):
    """Raised when a subroutine or extension violates the model."""


def _survival(pbar: np.ndarray) -> np.ndarray:
    """s[t] = Pr[stopping time >= t] for t = 0..T; s[0] = s[1] = 1."""
    return np.concatenate(([1.0], 1.0 - np.cumsum(pbar)[:-1]))


@dataclass(frozen=True)
class StoppingProfile:
    """Law of the stopping time of one input, with conditional errors.

    ``pbar[t]`` is the probability of halting exactly at step t (index 0
    unused), ``eps[t]`` the error probability conditioned on halting at t.
    """

    pbar: np.ndarray
    eps: np.ndarray

    @property
    def tmax(self) -> int:
        return len(self.pbar) - 1

    def survival(self) -> np.ndarray:
        return _survival(self.pbar)

    def mean(self) -> float:
        return float(np.sum(self.pbar * np.arange(len(self.pbar))))

    def second_moment(self) -> float:
        return float(np.sum(self.pbar * np.arange(len(self.pbar)) ** 2))

    def total_error(self) -> float:
        """eps_i = E[eps_i^{T_i}]."""
        return float(np.sum(self.pbar * self.eps))

    def expect_sum(self, alpha: np.ndarray) -> float:
        """E[sum_{t=0}^{T_i} alpha_t], via the survival function."""
        return float(np.sum(np.asarray(alpha) * self.survival()))

    def expect_sum_inverse(self, alpha: np.ndarray) -> float:
        """E[sum_{t=0}^{T_i} 1/alpha_t]."""
        return float(np.sum(self.survival() / np.asarray(alpha)))

    def expect_at_stop(self, weight: np.ndarray) -> float:
        """E[weight_{T_i} * eps_i^{T_i}]."""
        return float(np.sum(self.pbar * self.eps * np.asarray(weight)))


def alpha_sequence(mode: str, tmax: int) -> np.ndarray:
    """Weight sequences used by the frameworks: const, linear, inverse."""
    t = np.arange(tmax + 1, dtype=float)
    if mode == "const":
        return np.ones(tmax + 1)
    if mode == "linear":
        return t + 1.0
    if mode == "inverse":
        return 1.0 / (t + 1.0)
    raise SubroutineError(f"unknown alpha mode {mode!r}")


def check_alpha(alpha: Sequence[float], tmax: int) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if len(alpha) != tmax + 1:
        raise SubroutineError(f"alpha must have {tmax + 1} entries")
    if abs(alpha[0] - 1.0) > 1e-12:
        raise SubroutineError("alpha_0 must equal 1")
    if np.any(alpha <= 0.0):
        raise SubroutineError("alpha entries must be positive")
    return alpha


class VariableTimeSubroutine:
    """Unitary sequence with nested halting subspaces, one branch per input.

    Parameters
    ----------
    inputs:
        Input ids (the subroutine is controlled on these).
    n_answers:
        Size of the answer set; answer 0 is the designated initial value.
    z_sizes:
        ``|Z_t|`` for t = 1..T. Empty blocks are allowed; the total must be
        at least 1 and T must be odd.
    unitaries:
        ``unitaries[t][input index]`` for t = 1..T (index 0 unused), each a
        dense unitary on the ``n_answers * |Z|`` space.
    g:
        Target answer index per input.
    z_init:
        Workspace basis index of the initial state.
    """

    def __init__(self, inputs: Sequence[Hashable], n_answers: int,
                 z_sizes: Sequence[int], unitaries, g: Mapping[Hashable, int],
                 z_init: int = 0, *, config: Config = DEFAULT):
        self.config = config
        self.inputs = tuple(inputs)
        self.n_answers = int(n_answers)
        self.z_sizes = tuple(int(s) for s in z_sizes)
        self.tmax = len(self.z_sizes)
        self.nz = sum(self.z_sizes)
        self.dim = self.n_answers * self.nz
        self.z_init = int(z_init)
        self.g = dict(g)
        self.unitaries = unitaries

        if self.tmax % 2 == 0:
            raise SubroutineError("T must be odd (pad with identity steps)")
        if self.nz < 1:
            raise SubroutineError("workspace must be nonempty")
        if not (0 <= self.z_init < self.nz):
            raise SubroutineError("z_init outside workspace")
        if self.dim * len(self.inputs) > config.max_dim:
            raise SubroutineError(
                f"total dimension {self.dim * len(self.inputs)} exceeds cap {config.max_dim}")
        if set(self.g) != set(self.inputs):
            raise SubroutineError("g must assign an answer to every input")
        if any(not (0 <= a < self.n_answers) for a in self.g.values()):
            raise SubroutineError("g value outside the answer set")
        if len(unitaries) != self.tmax + 1:
            raise SubroutineError("need exactly T unitary layers (index 0 unused)")
        self._profiles: dict = {}

    # -- workspace layout ----------------------------------------------------

    def z_block(self, t: int) -> range:
        """Workspace indices of Z_t (t = 1..T)."""
        start = sum(self.z_sizes[: t - 1])
        return range(start, start + self.z_sizes[t - 1])

    def z_level(self, z: int) -> int:
        """The t with z in Z_t."""
        upto = 0
        for t, size in enumerate(self.z_sizes, start=1):
            upto += size
            if z < upto:
                return t
        raise SubroutineError(f"workspace index {z} out of range")

    def az_index(self, a: int, z: int) -> int:
        return a * self.nz + z

    def initial_state(self) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.az_index(0, self.z_init)] = 1.0
        return vec

    def projector_halt_leq(self, t: int) -> np.ndarray:
        """Pi_{<=t}: projector onto answers (x) H_t."""
        diag = np.zeros(self.dim)
        for a in range(self.n_answers):
            for s in range(1, t + 1):
                for z in self.z_block(s):
                    diag[self.az_index(a, z)] = 1.0
        return np.diag(diag)

    def projector_halt_at(self, t: int) -> np.ndarray:
        """Pi_t: projector onto answers (x) span Z_t."""
        diag = np.zeros(self.dim)
        for a in range(self.n_answers):
            for z in self.z_block(t):
                diag[self.az_index(a, z)] = 1.0
        return np.diag(diag)

    def projector_running(self, t: int) -> np.ndarray:
        """Pi_{>=t} = I - Pi_{<=t-1}."""
        return np.eye(self.dim) - self.projector_halt_leq(t - 1)

    def projector_answer(self, a: int) -> np.ndarray:
        diag = np.zeros(self.dim)
        diag[self.az_index(a, 0): self.az_index(a, 0) + self.nz] = 1.0
        return np.diag(diag)

    def unitary(self, t: int, inp: Hashable) -> np.ndarray:
        return self.unitaries[t][self.inputs.index(inp)]

    # -- derived laws ----------------------------------------------------------

    def algorithm_states(self, inp: Hashable) -> list[np.ndarray]:
        """|w^t(i)> for t = 0..T: w^t = U_t Pi_{>=t} w^{t-1}."""
        states = [self.initial_state()]
        for t in range(1, self.tmax + 1):
            run = self.projector_running(t) @ states[-1]
            states.append(self.unitary(t, inp) @ run)
        return states

    def stopping_profile(self, inp: Hashable) -> StoppingProfile:
        """Halting law and conditional errors, from the explicit matrices."""
        if inp in self._profiles:
            return self._profiles[inp]
        states = self.algorithm_states(inp)
        target = self.projector_answer(self.g[inp])
        pbar = np.zeros(self.tmax + 1)
        eps = np.zeros(self.tmax + 1)
        for t in range(1, self.tmax + 1):
            halted = self.projector_halt_at(t) @ states[t]
            p = float(np.vdot(halted, halted).real)
            pbar[t] = p
            if p > 1e-15:
                bad = halted - target @ halted
                eps[t] = float(np.vdot(bad, bad).real) / p
        prof = StoppingProfile(pbar, eps)
        self._profiles[inp] = prof
        return prof

    def g_by_index(self) -> dict:
        """g keyed by 1-based input position (the composition convention)."""
        return {k + 1: self.g[inp] for k, inp in enumerate(self.inputs)}

    def expectation_weighted(self, inp: Hashable, alpha: Sequence[float],
                             mode: str) -> float:
        """E over T_i of the alpha-weighted sums used by the frameworks.

        ``mode`` is one of ``sum_inverse`` (E[sum 1/alpha_t]), ``sum_direct``
        (E[sum alpha_t]), or ``at_T`` (E[alpha_{T_i} eps_i^{T_i}]).
        """
        alpha = check_alpha(alpha, self.tmax)
        prof = self.stopping_profile(inp)
        if mode == "sum_inverse":
            return prof.expect_sum_inverse(alpha)
        if mode == "sum_direct":
            return prof.expect_sum(alpha)
        if mode == "at_T":
            return prof.expect_at_stop(alpha)
        raise SubroutineError(f"unknown expectation mode {mode!r}")


@dataclass(frozen=True)
class ReversibleExtension:
    """The maps (A, A') that make a variable-time subroutine reversible.

    ``slot_dim`` is the dimension of the location register; ``input_slots``
    embeds each subroutine input as a basis slot; column i of ``a_map`` is
    ``A|i>``; ``a_controlled[a]`` is the unitary ``A_a`` on the slot space.
    """

    slot_dim: int
    input_slots: tuple
    a_map: np.ndarray
    a_controlled: tuple

    def input_vector(self, idx: int) -> np.ndarray:
        vec = np.zeros(self.slot_dim, dtype=complex)
        vec[self.input_slots[idx]] = 1.0
        return vec

    def image_vector(self, idx: int) -> np.ndarray:
        return np.asarray(self.a_map[:, idx], dtype=complex)


def phase_extension(sub: VariableTimeSubroutine) -> ReversibleExtension:
    """A|i> = (-1)^{g_i} |i>, A_a|i> = (-1)^a |i>; trivially reversible."""
    if sub.n_answers != 2:
        raise SubroutineError("phase extension requires binary answers")
    n = len(sub.inputs)
    a_map = np.zeros((n, n), dtype=complex)
    for k, inp in enumerate(sub.inputs):
        a_map[k, k] = (-1.0) ** sub.g[inp]
    a_ctrl = (np.eye(n, dtype=complex), -np.eye(n, dtype=complex))
    return ReversibleExtension(n, tuple(range(n)), a_map, a_ctrl)


@dataclass(frozen=True)
class ValidationReport:
    """Per-invariant max residuals for (subroutine, extension)."""

    residuals: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals.values())

    def worst(self) -> tuple[str, float]:
        name = max(self.residuals, key=self.residuals.get)
        return name, self.residuals[name]


def validate(sub: VariableTimeSubroutine,
             ext: ReversibleExtension | None = None) -> ValidationReport:
    """Check the model invariants; every entry is a max residual."""
    res = {}
    unit = 0.0
    for t in range(1, sub.tmax + 1):
        for k in range(len(sub.inputs)):
            u = sub.unitaries[t][k]
            if u.shape != (sub.dim, sub.dim):
                raise SubroutineError("unitary dimension mismatch")
            unit = max(unit, float(np.max(np.abs(u.conj().T @ u - np.eye(sub.dim)))))
    res["unitarity"] = unit

    inv = 0.0
    for t in range(1, sub.tmax + 1):
        proj = sub.projector_halt_leq(t - 1)
        for k in range(len(sub.inputs)):
            inv = max(inv, float(np.max(np.abs(sub.unitaries[t][k] @ proj - proj))))
    res["halting_invariance"] = inv

    res["law_normalization"] = max(
        abs(float(np.sum(sub.stopping_profile(i).pbar)) - 1.0) for i in sub.inputs)
    res["t_odd"] = 0.0 if sub.tmax % 2 == 1 else 1.0

    if ext is not None:
        if len(ext.input_slots) != len(sub.inputs):
            raise SubroutineError("extension input count mismatch")
        cond2 = 0.0
        for k, inp in enumerate(sub.inputs):
            a_g = ext.a_controlled[sub.g[inp]]
            cond2 = max(cond2, float(np.max(np.abs(
                a_g @ ext.input_vector(k) - ext.image_vector(k)))))
        res["extension_computes_a"] = cond2

        cond3 = 0.0
        for a in range(sub.n_answers):
            crossed = ext.a_map.conj().T @ ext.a_controlled[a]
            for k in range(len(sub.inputs)):
                col = crossed @ ext.input_vector(k)
                col[k] = 0.0
                cond3 = max(cond3, float(np.max(np.abs(col))))
        res["extension_no_cross_talk"] = cond3

        unit_a = 0.0
        for a_u in ext.a_controlled:
            unit_a = max(unit_a, float(np.max(np.abs(
                a_u.conj().T @ a_u - np.eye(ext.slot_dim)))))
        res["extension_unitarity"] = unit_a

    return ValidationReport(res, sub.config.tol_construct)


# -- builders -----------------------------------------------------------------

def _halting_block(q: float, eps: float) -> np.ndarray:
    """3x3 real orthogonal with first column (sqrt(1-q), sqrt(q(1-e)), sqrt(qe)).

    Ordering of the active basis: (running, halt-correct, halt-wrong). The
    completion is the deterministic Householder complement.
    """
    col = np.array([np.sqrt(max(1.0 - q, 0.0)),
                    np.sqrt(q * (1.0 - eps)),
                    np.sqrt(q * eps)])
    col /= np.linalg.norm(col)
    e0 = np.zeros(3)
    e0[0] = 1.0
    v = col - e0
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        return np.eye(3)
    v /= nv
    return np.eye(3) - 2.0 * np.outer(v, v)


def build_from_classical(laws: Mapping[Hashable, Sequence[tuple]],
                         answers: Mapping[Hashable, int],
                         errors: Mapping[Hashable, Sequence[tuple]] | None = None,
                         *, config: Config = DEFAULT) -> VariableTimeSubroutine:
    """Explicit unitaries realizing given halting laws and error flips.

    ``laws[i]`` is a list of (t, probability) pairs summing to 1;
    ``answers[i]`` the bit the subroutine should output; ``errors[i]`` an
    optional list of (t, eps) conditional flip probabilities. The workspace
    has one halt flag per used time plus one running state, so the returned
    stopping profiles reproduce the laws exactly.
    """
    errors = errors or {}
    inputs = list(laws)
    law_arrays = {}
    used_times: set[int] = set()
    for inp in inputs:
        pairs = list(laws[inp])
        if not pairs:
            raise SubroutineError(f"empty law for input {inp!r}")
        total = sum(p for _, p in pairs)
        if abs(total - 1.0) > config.tol_construct:
            raise SubroutineError(f"law for {inp!r} sums to {total}")
        tmax_i = max(t for t, _ in pairs)
        if tmax_i > config.subroutine_t_cap:
            raise SubroutineError(f"halting time {tmax_i} exceeds cap "
                                  f"{config.subroutine_t_cap}")
        arr = {}
        for t, p in pairs:
            if t < 1 or p < 0.0:
                raise SubroutineError(f"bad law entry ({t}, {p})")
            arr[t] = arr.get(t, 0.0) + p
        law_arrays[inp] = arr
        used_times |= {t for t, p in arr.items() if p > 0.0}

    t_last = max(used_times)
    tmax = t_last if t_last % 2 == 1 else t_last + 1

    # workspace: one halt flag per used time, then the running state
    halt_times = sorted(used_times)
    z_of_time = {t: k for k, t in enumerate(halt_times)}
    z_running = len(halt_times)
    z_sizes = [0] * tmax
    for t in halt_times:
        z_sizes[t - 1] += 1
    z_sizes[t_last - 1] += 1  # the running state halts by t_last at the latest
    nz = len(halt_times) + 1

    eps_maps = {inp: dict(errors.get(inp, [])) for inp in inputs}
    dim = 2 * nz

    def az(a, z):
        return a * nz + z

    unitaries = [None]
    for t in range(1, tmax + 1):
        layer = []
        for inp in inputs:
            u = np.eye(dim, dtype=complex)
            law = law_arrays[inp]
            p_here = law.get(t, 0.0)
            if p_here > 0.0:
                remaining = sum(p for s, p in law.items() if s >= t)
                q = min(p_here / remaining, 1.0)
                eps = float(eps_maps[inp].get(t, 0.0))
                good = answers[inp]
                idx = [az(0, z_running),
                       az(good, z_of_time[t]),
                       az(1 - good, z_of_time[t])]
                u[np.ix_(idx, idx)] = _halting_block(q, eps)
            layer.append(u)
        unitaries.append(layer)

    g = {inp: int(answers[inp]) for inp in inputs}
    return VariableTimeSubroutine(inputs, 2, z_sizes, unitaries, g,
                                  z_init=z_running, config=config)


def subroutine_from_dict(doc: Mapping, *, config: Config = DEFAULT):
    """Parse the subroutine JSON document.

    The classical form carries per-input ``halt_law``, ``answer`` and
    ``errors``; alternatively explicit dense unitaries may be supplied as
    row-major [re, im] pairs together with ``z_sizes`` and ``z_init``.
    """
    if "unitaries" in doc:
        z_sizes = doc["z_sizes"]
        inputs = list(doc["g"].keys())
        nz = sum(z_sizes)
        n_answers = int(doc.get("n_answers", 2))
        dim = n_answers * nz
        layers = [None]
        for layer in doc["unitaries"]:
            mats = []
            for flat in layer:
                arr = np.array([complex(re, im) for re, im in flat])
                mats.append(arr.reshape(dim, dim))
            layers.append(mats)
        g = {i: int(a) for i, a in doc["g"].items()}
        return VariableTimeSubroutine(inputs, n_answers, z_sizes, layers, g,
                                      z_init=int(doc.get("z_init", 0)),
                                      config=config)
    laws, answers, errors = {}, {}, {}
    for name, entry in doc["inputs"].items():
        laws[name] = [(int(t), float(p)) for t, p in entry["halt_law"]]
        answers[name] = int(entry["answer"])
        errors[name] = [(int(t), float(e)) for t, e in entry.get("errors", [])]
    return build_from_classical(laws, answers, errors, config=config)
