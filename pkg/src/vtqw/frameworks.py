"""Corollary layer: variable-time search, walk claim bounds, MNRS reduction.

Search reduces to a star graph: a centre connected to one leaf per search
index, edge weights pi(i) (or pi(i) E[T_i] when expected times are known),
with the checking subroutine acting as the edge transition. Three weight
regimes give three incomparable complexities; for zero-variance singleton
instances the smallest one is determined by how the marked index's time
compares to the first- and second-moment averages.

The checking-cost claims attach one pendant vertex per graph vertex whose
transition time is the checking time, with claim-specific pendant weights.
The MNRS reduction designs its flow from an absorbing random process whose
expected departure counts solve a dense linear system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import DEFAULT, Config
from .network import (Distribution, Flow, MCEstimate, Network, NetworkError,
                      effective_resistance, min_energy_flow,
                      min_energy_flow_to_set, spectral_gap,
                      stationary_distribution, total_weight,
                      transition_matrix)
from .subroutine import (StoppingProfile, VariableTimeSubroutine,
                         alpha_sequence, build_from_classical)
from .walk_compose import WalkInstance, walk_extension


class FrameworkError(ValueError):
    """Raised on invalid search/claim/MNRS inputs."""


def _law_moments(law: Sequence[tuple]) -> tuple[float, float, int]:
    """(E[T], E[T^2], T_max) of a halting law given as (t, prob) pairs."""
    total = sum(p for _, p in law)
    if abs(total - 1.0) > 1e-9:
        raise FrameworkError(f"law sums to {total}")
    e1 = sum(t * p for t, p in law)
    e2 = sum(t * t * p for t, p in law)
    tmax = max(t for t, _ in law)
    return e1, e2, tmax


def _law_alpha_sum(law: Sequence[tuple], mode: str, tmax: int,
                   inverse: bool = False) -> float:
    """E[sum_{t=0}^{T} alpha_t] (or with 1/alpha_t) for a classical law."""
    alpha = alpha_sequence(mode, tmax)
    weights = 1.0 / alpha if inverse else alpha
    csum = np.cumsum(weights)
    return float(sum(p * csum[t] for t, p in law))


@dataclass(frozen=True)
class SearchInstance:
    """Search space [1..n] with per-index stopping laws and marked bits."""

    n: int
    pi: Distribution                    # over 1..n
    laws: Mapping[int, Sequence[tuple]]
    g: Mapping[int, int]
    eps: float | None = None            # lower bound on marked mass

    def __post_init__(self):
        if set(self.laws) != set(range(1, self.n + 1)):
            raise FrameworkError("laws must cover 1..n")
        if not set(self.g) <= set(range(1, self.n + 1)):
            raise FrameworkError("marked predicate outside the search space")

    def marked_set(self) -> list[int]:
        return [i for i in range(1, self.n + 1) if self.g.get(i, 0) == 1]

    def marked_mass(self, marked: Iterable[int]) -> float:
        return float(sum(self.pi(i) for i in marked))

    def tmax(self) -> int:
        return max(max(t for t, _ in law) for law in self.laws.values())


@dataclass(frozen=True)
class ComplexityReport:
    """Evaluated complexity expressions plus measured diagnostics."""

    kind: str
    values: dict
    measured: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def value(self, name: str) -> float:
        return self.values[name]


# -- Table of search complexities ---------------------------------------------

def vt_search_complexities(si: SearchInstance, marked: Iterable[int]) -> ComplexityReport:
    """The three weight-regime complexities, plus singleton closed forms.

    Expression (1) uses alpha_t = t+1, (2) alpha_t = 1, (3) alpha_t = 1/(t+1):

      (1) sqrt( sum_i pi_i E[T_i^2] / pi(M) )
      (2) sqrt( sum_i pi_i E[T_i] / sum_{i in M} pi_i / E[T_i] )
      (3) 1 / sqrt( sum_{i in M} pi_i / E[T_i^2] )

    For zero-variance singleton instances the smallest expression follows
    the threshold rule on E[T_m] against the moment averages.
    """
    marked = sorted(set(marked))
    if not marked:
        raise FrameworkError("expressions need a nonempty marked set")
    m1 = {i: _law_moments(si.laws[i])[0] for i in range(1, si.n + 1)}
    m2 = {i: _law_moments(si.laws[i])[1] for i in range(1, si.n + 1)}
    avg1 = sum(si.pi(i) * m1[i] for i in range(1, si.n + 1))
    avg2 = sum(si.pi(i) * m2[i] for i in range(1, si.n + 1))
    mass = si.marked_mass(marked)
    if mass <= 0.0:
        raise FrameworkError("marked set carries no mass")

    expr1 = math.sqrt(avg2 / mass)
    expr2 = math.sqrt(avg1 / sum(si.pi(i) / m1[i] for i in marked))
    expr3 = 1.0 / math.sqrt(sum(si.pi(i) / m2[i] for i in marked))
    values = {"expr1": expr1, "expr2": expr2, "expr3": expr3}

    notes: dict = {"alpha_modes": {"expr1": "linear", "expr2": "const",
                                   "expr3": "inverse"}}
    if len(marked) == 1:
        m = marked[0]
        eps = si.eps if si.eps is not None else si.pi(m)
        values.update({
            "special1": math.sqrt(avg2 / eps),
            "special2": math.sqrt(avg1 * m1[m] / eps),
            "special3": math.sqrt(m2[m] / eps),
        })
        # zero-variance regime rule on T_m vs the moment averages
        ratio = avg2 / avg1
        t_m = m1[m]
        if t_m > ratio:
            notes["regime"] = "expr1"
        elif t_m > avg1:
            notes["regime"] = "expr2"
        else:
            notes["regime"] = "expr3"
        notes["thresholds"] = {"first_moment": avg1, "moment_ratio": ratio}
    return ComplexityReport("vt-search", values, notes=notes)


# -- search as a quantum walk ----------------------------------------------------

SEARCH_CENTER = "u0"


def search_leaf(i: int, bit: int) -> tuple:
    return ("u", i, bit)


def build_search_walk(si: SearchInstance, marked: Iterable[int] | None = None,
                      *, known_times: bool = False, config: Config = DEFAULT):
    """Star-graph walk instance for the search problem.

    Returns (instance, theta, R, W): the assembled walk, the witness flow
    (None when nothing is marked), and the promise-level condition bounds
    used to run the decision. With unknown expected times the weights are
    pi(i) and alpha_t = t+1; with known times, pi(i) E[T_i] and alpha_t = 1.
    """
    marked = si.marked_set() if marked is None else sorted(set(marked))
    eps = si.eps if si.eps is not None else (si.marked_mass(marked) or
                                             min(si.pi(i) for i in range(1, si.n + 1)
                                                 if si.pi(i) > 0))
    if eps <= 0.0:
        raise FrameworkError("need a positive marked-mass lower bound")

    moments = {i: _law_moments(si.laws[i]) for i in range(1, si.n + 1)}
    leaves = [search_leaf(i, si.g.get(i, 0)) for i in range(1, si.n + 1)]
    edges = []
    for i in range(1, si.n + 1):
        w = si.pi(i) * (moments[i][0] if known_times else 1.0)
        if w <= 0.0:
            raise FrameworkError(f"index {i} has zero weight")
        edges.append((SEARCH_CENTER, leaves[i - 1], w))
    net = Network([SEARCH_CENTER] + leaves, edges, config=config)

    laws = {k: list(si.laws[k + 1]) for k in range(si.n)}
    answers = {k: 1 for k in range(si.n)}
    sub = build_from_classical(laws, answers, config=config)
    ext = walk_extension(net, answer_controlled=False)

    alpha = "const" if known_times else "linear"
    tmax = sub.tmax
    if known_times:
        r_bound = 2.0 / eps
        w_bound = sum(si.pi(i) * moments[i][0] *
                      _law_alpha_sum(si.laws[i], "const", tmax)
                      for i in range(1, si.n + 1))
    else:
        r_bound = (math.log(tmax + 1.0) + 1.0) / eps
        w_bound = sum(si.pi(i) * _law_alpha_sum(si.laws[i], "linear", tmax)
                      for i in range(1, si.n + 1))

    marked_vertices = [search_leaf(i, si.g.get(i, 0)) for i in marked]
    sigma = Distribution.point(SEARCH_CENTER)
    inst = WalkInstance(net, [SEARCH_CENTER], leaves, marked_vertices, sigma,
                        sub, ext, alpha, w0=1.0 / r_bound, config=config)

    theta = None
    if marked:
        mass = si.marked_mass(marked)
        vals = np.zeros(len(net.edges))
        for pos, i in enumerate(range(1, si.n + 1)):
            if i in marked:
                vals[pos] = si.pi(i) / mass
        theta = Flow(net, vals)
    return inst, theta, r_bound, w_bound


# -- checking-cost claims ----------------------------------------------------------

def _pendant(u) -> tuple:
    return ("check", u)


def _claim_pendant_weight(claim: str, u, net: Network, tau: Distribution,
                          eps: float, c_sigma: float, d_marked: float,
                          w_total: float) -> float:
    if claim == "0":
        return net.vertex_weight(u)
    if claim in ("I", "II"):
        return w_total * d_marked * tau(u) / (eps * c_sigma)
    if claim == "III":
        return tau(u) * w_total / (eps * c_sigma)
    raise FrameworkError(f"unknown claim {claim!r}")


def vt_walk_claim_bounds(net: Network, marked: Iterable, tau: Distribution | None,
                         claim: str, known_times: bool,
                         c_laws: Mapping, t_laws: Mapping,
                         sigma: Distribution | None = None,
                         eps: float | None = None,
                         d_marked_override: float | None = None) -> ComplexityReport:
    """Claim-specific pendant weighting with measured P3/N1 against the bound.

    ``t_laws`` maps oriented-edge index to a halting law, ``c_laws`` maps
    vertices to checking laws. Claim "0" requires trivial checking, claim
    "II" a singleton marked set (and is claim "I" with the marked-flow
    spread bound D_M set to 1), claim "III" uses the resistance to the
    terminal distribution instead of to the marked set. Pendant edges carry
    the mass the flow absorbs at their vertex, so P1/P2 hold exactly even
    when sigma overlaps the marked set.
    """
    marked = list(marked)
    claim = str(claim)
    if claim == "II" and len(marked) > 1:
        raise FrameworkError("claim II requires |M| <= 1")
    if claim == "0":
        for u, law in c_laws.items():
            if _law_moments(law)[0] > 1.0 + 1e-12:
                raise FrameworkError("claim 0 requires trivial checking cost")
    if sigma is None:
        sigma = stationary_distribution(net)
    w_total = total_weight(net)
    pi = stationary_distribution(net)
    pmat = transition_matrix(net)

    t_mom = {k: _law_moments(t_laws[k]) for k in range(len(net.edges))}
    c_mom = {u: _law_moments(c_laws[u]) for u in net.vertices}
    tmax = max(m[2] for m in t_mom.values())
    cmax = max(m[2] for m in c_mom.values())

    # weighted second/first-moment averages over edges and vertices
    t_avg2 = sum(pi(e.u) * pmat[net.index(e.u), net.index(e.v)] * t_mom[k][1]
                 for k, e in enumerate(net.edges))
    t_avg2_known = sum(pi(e.u) * pmat[net.index(e.u), net.index(e.v)]
                       * t_mom[k][0] ** 2 for k, e in enumerate(net.edges))
    tau_eff = tau if tau is not None else pi
    c_avg2 = sum(tau_eff(u) * c_mom[u][1] for u in net.vertices)
    c_avg2_known = sum(tau_eff(u) * c_mom[u][0] ** 2 for u in net.vertices)

    theta = d_marked = None
    r_sigma = None
    absorbed = {}
    if marked:
        if claim == "III":
            tau_m = Distribution({u: tau_eff(u) / sum(tau_eff(v) for v in marked)
                                  for u in marked})
            demand = {u: sigma(u) - tau_m(u)
                      for u in set(sigma.weights) | set(tau_m.weights)}
            theta = min_energy_flow(net, demand)
            r_sigma = theta.energy()
            absorbed = {u: tau_m(u) for u in marked}
            d_marked = 1.0
        else:
            theta = min_energy_flow_to_set(net, sigma, marked)
            r_sigma = theta.energy()
            tau_mass = sum(tau_eff(u) for u in marked)
            div = theta.divergence()
            absorbed = {u: sigma(u) - div[net.index(u)] for u in marked}
            d_marked = sum(absorbed[u] ** 2 / (tau_eff(u) / tau_mass)
                           for u in marked) if claim == "I" else 1.0
        if eps is None:
            eps = sum(tau_eff(u) for u in marked)
    if eps is None:
        eps = min(tau_eff(u) for u in net.vertices if tau_eff(u) > 0)
    c_sigma = w_total * (r_sigma if r_sigma is not None else
                         max(effective_resistance(net, sigma, [u]) for u in net.vertices
                             if u not in sigma.support()))
    dm = d_marked if d_marked is not None else 1.0
    if d_marked_override is not None:
        dm = float(d_marked_override)

    # measured condition sums over G' = G + pendants
    alpha_mode = "const" if known_times else "linear"
    scale_t = {k: (t_mom[k][0] if known_times else 1.0)
               for k in range(len(net.edges))}
    scale_c = {u: (c_mom[u][0] if known_times else 1.0) for u in net.vertices}
    pendant_w = {u: _claim_pendant_weight(claim, u, net, tau_eff, eps,
                                          c_sigma, dm, w_total) * scale_c[u]
                 for u in net.vertices}

    big_t = max(tmax, cmax)
    n1 = sum(net.edges[k].w * scale_t[k]
             * _law_alpha_sum(t_laws[k], alpha_mode, big_t)
             for k in range(len(net.edges)))
    n1 += sum(pendant_w[u] * _law_alpha_sum(c_laws[u], alpha_mode, big_t)
              for u in net.vertices)

    p3 = None
    if theta is not None:
        p3 = sum(theta.values[k] ** 2 / (net.edges[k].w * scale_t[k])
                 * _law_alpha_sum(t_laws[k], alpha_mode, big_t, inverse=True)
                 for k in range(len(net.edges)))
        for u in marked:
            p3 += absorbed[u] ** 2 / pendant_w[u] \
                * _law_alpha_sum(c_laws[u], alpha_mode, big_t, inverse=True)

    # claimed bounds, per the proof's explicit chains
    log_t = math.log(max(tmax, 2))
    log_c = math.log(max(cmax, 2))
    ratio = c_sigma / w_total
    if claim == "0":
        r_claim = 4.0 * ratio * log_t if not known_times else 4.0 * ratio
        w_claim = (2.0 * w_total * t_avg2 + 2.0 * w_total if not known_times
                   else 4.0 * w_total * t_avg2_known + 2.0 * w_total)
    elif claim in ("I", "II"):
        r_claim = (2.0 * ratio * (log_t + log_c) if not known_times
                   else 4.0 * ratio)
        tail = w_total * dm / c_sigma / eps
        w_claim = (2.0 * w_total * t_avg2 + tail * c_avg2 if not known_times
                   else 4.0 * w_total * t_avg2_known + 2.0 * tail * c_avg2_known)
    else:  # claim III
        r_claim = (2.0 * ratio * (log_t + log_c) if not known_times
                   else 4.0 * ratio)
        tail = w_total / c_sigma / eps
        w_claim = (4.0 * w_total * t_avg2 + tail * c_avg2 if not known_times
                   else 4.0 * w_total * t_avg2_known + 2.0 * tail * c_avg2_known)

    values = {"R_claim": r_claim, "W_claim": w_claim,
              "bound": math.sqrt(max(r_claim, 0.0) * max(w_claim, 0.0))}
    measured = {"P3": p3, "N1": n1,
                "P3_within_claim": None if p3 is None else p3 <= r_claim * (1 + 1e-12),
                "N1_within_claim": n1 <= w_claim * (1 + 1e-12)}
    notes = {"claim": claim, "known_times": known_times, "eps": eps,
             "C_sigma": c_sigma, "D_marked": dm, "alpha_mode": alpha_mode}
    return ComplexityReport("vt-walk-claim", values, measured, notes)


# -- MNRS ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MnrsFlowResult:
    flow: Flow
    expected_departures: np.ndarray   # E[N_u ->] per vertex, net order
    expected_steps: float             # sum_u E[N_u ->]
    energy_ratio: float               # sum theta^2/(pi P) against expected_steps

    def inequality_margin(self) -> float:
        return self.expected_steps - self.energy_ratio


def mnrs_flow(net: Network, marked: Iterable, p: float) -> MnrsFlowResult:
    """Visit counts and flow of the absorbing check-with-probability-p walk.

    Solves the departure-count system exactly: on unmarked vertices
    N_u = pi(u) + sum_v P_vu N_v; on marked ones the right side is damped
    by (1 - p). The flow theta(u, v) = P_uv N_u - P_vu N_v satisfies
    sum theta^2 / (pi P) <= sum_u N_u.
    """
    marked = list(marked)
    if not marked:
        raise FrameworkError("MNRS flow needs a nonempty marked set")
    if not (0.0 < p <= 1.0):
        raise FrameworkError("halting probability must be in (0, 1]")
    pi = stationary_distribution(net).as_vector(net)
    pmat = transition_matrix(net)
    damp = np.ones(net.n)
    for u in marked:
        damp[net.index(u)] = 1.0 - p
    system = np.eye(net.n) - damp[:, None] * pmat.T
    try:
        counts = np.linalg.solve(system, damp * pi)
    except np.linalg.LinAlgError:
        raise FrameworkError("singular departure system (is p positive?)") from None

    vals = np.array([pmat[net.index(e.u), net.index(e.v)] * counts[net.index(e.u)]
                     - pmat[net.index(e.v), net.index(e.u)] * counts[net.index(e.v)]
                     for e in net.edges])
    flow = Flow(net, vals)
    ratio = float(sum(
        vals[k] ** 2 / (pi[net.index(e.u)] * pmat[net.index(e.u), net.index(e.v)])
        for k, e in enumerate(net.edges)))
    return MnrsFlowResult(flow, counts, float(np.sum(counts)), ratio)


def mnrs_process_mc(net: Network, marked: Iterable, p: float, runs: int = 20000,
                    seed: int = 0) -> tuple[np.ndarray, np.ndarray, MCEstimate]:
    """Monte Carlo departure counts of the absorbing process.

    Returns (mean departures per vertex, their standard errors, total-step
    estimate); deterministic given the seed.
    """
    marked_idx = {net.index(u) for u in marked}
    pi = stationary_distribution(net).as_vector(net)
    cum = np.cumsum(transition_matrix(net), axis=1)
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    counts = np.zeros((runs, net.n), dtype=np.int64)
    cur = rng.choice(net.n, size=runs, p=pi)
    active = np.ones(runs, dtype=bool)
    guard = 0
    mask = np.zeros(net.n, dtype=bool)
    mask[list(marked_idx)] = True
    while active.any() and guard < 10_000_000:
        at_marked = active & mask[cur]
        if at_marked.any():
            halts = rng.random(int(at_marked.sum())) < p
            idx = np.nonzero(at_marked)[0][halts]
            active[idx] = False
        live = np.nonzero(active)[0]
        if live.size == 0:
            break
        np.add.at(counts, (live, cur[live]), 1)
        u = rng.random(live.size)
        cur[live] = (cum[cur[live]] < u[:, None]).sum(axis=1)
        guard += 1
    means = counts.mean(axis=0)
    stderr = counts.std(axis=0, ddof=1) / math.sqrt(runs)
    totals = counts.sum(axis=1)
    est = MCEstimate(float(totals.mean()),
                     float(totals.std(ddof=1) / math.sqrt(runs)), runs, seed)
    return means, stderr, est


def mnrs_bound(net: Network, marked: Iterable, c_laws: Mapping, t_laws: Mapping,
               known_times: bool = False, *, eps: float | None = None,
               config: Config = DEFAULT) -> ComplexityReport:
    """The MNRS-style complexity and the measured condition quantities.

    Evaluates S + (1/sqrt(eps)) (T_avg / sqrt(gap) + C_avg)
    sqrt(log 1/pi_min) log^{1.5}(T C) (primed moments and a single log when
    the expected times are known); assembles the pendant graph with weights
    gap * w_u and reports measured P3/N1 next to the bound, as ratios.
    """
    marked = list(marked)
    pi = stationary_distribution(net)
    gap = spectral_gap(net)
    pi_min = min(pi(u) for u in net.vertices)
    if eps is None:
        eps = sum(pi(u) for u in marked) if marked else pi_min

    t_mom = {k: _law_moments(t_laws[k]) for k in range(len(net.edges))}
    c_mom = {u: _law_moments(c_laws[u]) for u in net.vertices}
    tmax = max(m[2] for m in t_mom.values())
    cmax = max(m[2] for m in c_mom.values())
    pmat = transition_matrix(net)
    t_avg = math.sqrt(sum(pi(e.u) * pmat[net.index(e.u), net.index(e.v)]
                          * (t_mom[k][0] ** 2 if known_times else t_mom[k][1])
                          for k, e in enumerate(net.edges)))
    c_avg = math.sqrt(sum(pi(u) * (c_mom[u][0] ** 2 if known_times
                                   else c_mom[u][1]) for u in net.vertices))
    log_pi = math.sqrt(math.log(1.0 / pi_min))
    log_tc = math.log(max(tmax * cmax, 2))
    log_factor = log_tc if known_times else log_tc ** 1.5
    bound = 1.0 + (t_avg / math.sqrt(gap) + c_avg) / math.sqrt(eps) \
        * log_pi * log_factor

    # measured sums over G' with pendant weights gap * w_u
    alpha_mode = "const" if known_times else "linear"
    big_t = max(tmax, cmax)
    w_total = total_weight(net)
    n1 = sum(net.edges[k].w * (t_mom[k][0] if known_times else 1.0)
             * _law_alpha_sum(t_laws[k], alpha_mode, big_t)
             for k in range(len(net.edges)))
    n1 += sum(gap * net.vertex_weight(u) * (c_mom[u][0] if known_times else 1.0)
              * _law_alpha_sum(c_laws[u], alpha_mode, big_t)
              for u in net.vertices)

    measured: dict = {"N1": n1}
    if marked:
        p = gap / math.log(2.0 / pi_min ** 2)
        p = min(max(p, 1e-9), 1.0)
        res = mnrs_flow(net, marked, p)
        div = res.flow.divergence()
        p3 = sum(res.flow.values[k] ** 2
                 / (net.edges[k].w * (t_mom[k][0] if known_times else 1.0))
                 * _law_alpha_sum(t_laws[k], alpha_mode, big_t, inverse=True)
                 for k in range(len(net.edges)))
        p3 += sum(div[net.index(u)] ** 2
                  / (gap * net.vertex_weight(u) * (c_mom[u][0] if known_times else 1.0))
                  * _law_alpha_sum(c_laws[u], alpha_mode, big_t, inverse=True)
                  for u in marked)
        measured.update({"P3": p3, "halting_p": p,
                         "sqrt_RW": math.sqrt(max(p3, 0.0) * n1),
                         "inequality_margin": res.inequality_margin()})
    values = {"bound": bound, "T_avg": t_avg, "C_avg": c_avg, "gap": gap,
              "eps": eps, "pi_min": pi_min}
    return ComplexityReport("mnrs", values, measured,
                            {"known_times": known_times})


def mnrs_walk_instance(net: Network, marked: Iterable, c_laws: Mapping,
                       t_laws: Mapping, *, r_bound: float | None = None,
                       config: Config = DEFAULT):
    """Assemble the pendant-graph walk instance behind the MNRS reduction.

    Pendant weights are gap * w_u; the checking laws become the pendant
    transition laws. Returns (instance, R, W) ready for ``WalkInstance.run``.
    """
    marked = list(marked)
    gap = spectral_gap(net)
    pi = stationary_distribution(net)
    pi_min = min(pi(u) for u in net.vertices)

    vertices = list(net.vertices) + [_pendant(u) for u in net.vertices]
    edges = [(e.u, e.v, e.w) for e in net.edges]
    edges += [(u, _pendant(u), gap * net.vertex_weight(u)) for u in net.vertices]
    big = Network(vertices, edges, config=config)

    laws = {}
    for k in range(len(net.edges)):
        laws[k] = list(t_laws[k])
    for j, u in enumerate(net.vertices):
        laws[len(net.edges) + j] = list(c_laws[u])
    answers = {k: 1 for k in laws}
    sub = build_from_classical(laws, answers, config=config)
    ext = walk_extension(big, answer_controlled=False)

    report = mnrs_bound(net, marked, c_laws, t_laws, config=config)
    n1 = report.measured["N1"]
    if r_bound is None:
        log_tc = math.log(max(2, sub.tmax))
        r_bound = (1.0 / (2.0 * total_weight(net))) \
            * (math.log(1.0 / pi_min) * log_tc + 16.0 * log_tc) \
            / (report.values["eps"] * gap)
        if "P3" in report.measured:
            r_bound = max(r_bound, report.measured["P3"])

    inst = WalkInstance(big, list(net.vertices), [_pendant(u) for u in net.vertices],
                        [_pendant(u) for u in marked],
                        Distribution({u: pi(u) for u in net.vertices}),
                        sub, ext, "linear", w0=1.0 / r_bound, config=config)
    return inst, r_bound, max(n1, 1.0)
