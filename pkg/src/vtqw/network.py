"""Weighted networks, random-walk quantities, flows, and electric quantities.

A network is an undirected weighted graph with a fixed, arbitrary edge
orientation. Weights are conductances. Every vertex carries a finite set of
edge labels split into outgoing (``L+``, vertex is the stored tail) and
incoming (``L-``, vertex is the stored head) labels; ``f_u(label)`` returns
the neighbour reached through that label. All derived quantities are
orientation-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .config import DEFAULT, Config

Vertex = Hashable


class NetworkError(ValueError):
    """Raised when a network, flow, or distribution violates an invariant."""


@dataclass(frozen=True)
class Edge:
    u: Vertex
    v: Vertex
    w: float
    label_u: Hashable
    label_v: Hashable


class Network:
    """Immutable weighted graph with a chosen orientation and edge labels.

    Parameters
    ----------
    vertices:
        Vertex ids in a fixed order.
    edges:
        Iterables ``(u, v, w)`` or ``(u, v, w, label_u, label_v)``. The
        stored orientation is ``u -> v``; labels default to the edge index.
    """

    def __init__(self, vertices: Sequence[Vertex], edges: Iterable, *,
                 config: Config = DEFAULT):
        self.config = config
        self.vertices: tuple = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise NetworkError("duplicate vertex ids")
        self._vindex = {u: k for k, u in enumerate(self.vertices)}

        built = []
        for e in edges:
            if len(e) == 3:
                u, v, w = e
                lu, lv = len(built), len(built)
            elif len(e) == 5:
                u, v, w, lu, lv = e
            else:
                raise NetworkError(f"edge tuple of length {len(e)}")
            if u not in self._vindex or v not in self._vindex:
                raise NetworkError(f"edge ({u!r}, {v!r}) references unknown vertex")
            if u == v:
                raise NetworkError("self-loops are not supported")
            if not (float(w) > 0.0):
                raise NetworkError(f"edge ({u!r}, {v!r}) has non-positive weight {w!r}")
            built.append(Edge(u, v, float(w), lu, lv))
        self.edges: tuple = tuple(built)

        # label -> (edge index, +1 if this vertex is the stored tail else -1);
        # parallel edges are allowed and distinguished by their labels
        self._labels: dict = {u: {} for u in self.vertices}
        for k, e in enumerate(self.edges):
            for vert, lab, sign in ((e.u, e.label_u, +1), (e.v, e.label_v, -1)):
                if lab in self._labels[vert]:
                    raise NetworkError(f"vertex {vert!r} reuses label {lab!r}")
                self._labels[vert][lab] = (k, sign)

        n = len(self.vertices)
        self._adj = np.zeros((n, n))
        for e in self.edges:
            i, j = self._vindex[e.u], self._vindex[e.v]
            self._adj[i, j] += e.w
            self._adj[j, i] += e.w
        self._wu = self._adj.sum(axis=1)

    # -- basic structure ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    def index(self, u: Vertex) -> int:
        return self._vindex[u]

    def vertex_weight(self, u: Vertex) -> float:
        """w_u, the total weight incident to u."""
        return float(self._wu[self.index(u)])

    def weight_matrix(self) -> np.ndarray:
        return self._adj.copy()

    def labels(self, u: Vertex, sign: int | None = None) -> list:
        """Labels of u; restrict to L+ (sign=+1) or L- (sign=-1)."""
        items = self._labels[u].items()
        return [lab for lab, (_, s) in items if sign is None or s == sign]

    def neighbor(self, u: Vertex, label: Hashable) -> Vertex:
        """f_u(label): the vertex reached from u through the label."""
        k, sign = self._labels[u][label]
        e = self.edges[k]
        return e.v if sign > 0 else e.u

    def edge_of_label(self, u: Vertex, label: Hashable) -> tuple[int, int]:
        """(edge index, orientation sign of u) for a label of u."""
        return self._labels[u][label]

    def edge_weight(self, u: Vertex, v: Vertex) -> float:
        return float(self._adj[self.index(u), self.index(v)])

    def components(self) -> list[set]:
        seen, comps = set(), []
        for root in self.vertices:
            if root in seen:
                continue
            comp, stack = set(), [root]
            while stack:
                x = stack.pop()
                if x in comp:
                    continue
                comp.add(x)
                i = self.index(x)
                for j in np.nonzero(self._adj[i])[0]:
                    stack.append(self.vertices[j])
            seen |= comp
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) == 1

    def oriented_pairs(self) -> list[tuple[Vertex, Vertex]]:
        return [(e.u, e.v) for e in self.edges]


@dataclass(frozen=True)
class Distribution:
    """Probability distribution over vertices (or any finite id set)."""

    weights: Mapping[Vertex, float]
    tol: float = 1e-9

    def __post_init__(self):
        total = float(sum(self.weights.values()))
        if abs(total - 1.0) > self.tol:
            raise NetworkError(f"distribution sums to {total}, not 1")
        if any(p < -self.tol for p in self.weights.values()):
            raise NetworkError("negative probability")

    def support(self) -> set:
        return {u for u, p in self.weights.items() if p > 0.0}

    def __call__(self, u: Vertex) -> float:
        return float(self.weights.get(u, 0.0))

    def as_vector(self, net: Network) -> np.ndarray:
        vec = np.zeros(net.n)
        for u, p in self.weights.items():
            if u not in net._vindex:
                raise NetworkError(f"distribution supported outside vertex set: {u!r}")
            vec[net.index(u)] = p
        return vec

    @staticmethod
    def point(u: Vertex) -> "Distribution":
        return Distribution({u: 1.0})


class Flow:
    """Antisymmetric edge function, stored once per oriented edge."""

    def __init__(self, net: Network, values: np.ndarray):
        if len(values) != len(net.edges):
            raise NetworkError("flow length does not match edge list")
        self.net = net
        self.values = np.asarray(values, dtype=float)

    def theta(self, u: Vertex, v: Vertex) -> float:
        """Net theta(u, v), summed over parallel edges, sign per orientation."""
        total, found = 0.0, False
        for k, e in enumerate(self.net.edges):
            if (e.u, e.v) == (u, v):
                total += float(self.values[k])
                found = True
            elif (e.u, e.v) == (v, u):
                total -= float(self.values[k])
                found = True
        if not found:
            raise NetworkError(f"({u!r}, {v!r}) is not an edge")
        return total

    def divergence(self) -> np.ndarray:
        """theta(u) = sum_v theta(u, v) for every vertex, as a vector."""
        out = np.zeros(self.net.n)
        for k, e in enumerate(self.net.edges):
            out[self.net.index(e.u)] += self.values[k]
            out[self.net.index(e.v)] -= self.values[k]
        return out

    def vertex_flow(self, u: Vertex) -> float:
        return float(self.divergence()[self.net.index(u)])

    def boundary(self, tol: float = 1e-9) -> set:
        div = self.divergence()
        return {self.net.vertices[i] for i in np.nonzero(np.abs(div) > tol)[0]}

    def is_circulation(self, tol: float = 1e-9) -> bool:
        return not self.boundary(tol)

    def energy(self) -> float:
        """E(theta) = sum_e theta(e)^2 / w_e."""
        w = np.array([e.w for e in self.net.edges])
        return float(np.sum(self.values ** 2 / w))

    def scaled(self, c: float) -> "Flow":
        return Flow(self.net, c * self.values)


# -- random-walk quantities ------------------------------------------------

def total_weight(net: Network) -> float:
    """W(G) = sum of oriented-edge weights."""
    return float(sum(e.w for e in net.edges))


def transition_matrix(net: Network) -> np.ndarray:
    """Row-stochastic P with P[u, v] = w_uv / w_u."""
    if np.any(net._wu <= 0.0):
        bad = net.vertices[int(np.argmin(net._wu))]
        raise NetworkError(f"isolated vertex {bad!r}")
    return net._adj / net._wu[:, None]


def stationary_distribution(net: Network) -> Distribution:
    """pi(u) = w_u / (2 W(G)); the unique left-1-eigenvector of P."""
    if not net.is_connected():
        raise NetworkError("stationary distribution requires a connected graph")
    pi = net._wu / (2.0 * total_weight(net))
    return Distribution({u: float(pi[net.index(u)]) for u in net.vertices})


def spectral_gap(net: Network, zero_tol: float = 1e-9) -> float:
    """Smallest nonzero eigenvalue of I - P (symmetrized computation)."""
    if not net.is_connected():
        raise NetworkError("spectral gap requires a connected graph")
    d = np.sqrt(net._wu)
    sym = net._adj / np.outer(d, d)
    eigs = np.linalg.eigvalsh(sym)
    gaps = 1.0 - eigs
    gaps = gaps[gaps > zero_tol]
    if gaps.size == 0:
        raise NetworkError("no nonzero eigenvalue of I - P")
    return float(np.min(gaps))


# -- flows and resistances -------------------------------------------------

def _laplacian(net: Network) -> np.ndarray:
    return np.diag(net._wu) - net._adj


def _flow_from_potential(net: Network, phi: np.ndarray) -> Flow:
    vals = np.array([e.w * (phi[net.index(e.u)] - phi[net.index(e.v)])
                     for e in net.edges])
    return Flow(net, vals)


def min_energy_flow(net: Network, demand: Mapping[Vertex, float]) -> Flow:
    """Unique flow with prescribed divergence minimizing the energy.

    Solved through the Laplacian system L phi = demand with a dense
    pseudo-inverse (the Laplacian is rank-deficient by one per component);
    theta = w (phi_u - phi_v). Raises on infeasible demands.
    """
    d = np.zeros(net.n)
    for u, val in demand.items():
        d[net.index(u)] = float(val)
    support = {u for u, val in demand.items() if abs(val) > 0.0}
    comps = net.components()
    for comp in comps:
        csum = sum(d[net.index(u)] for u in comp)
        if abs(csum) > net.config.tol_construct:
            raise NetworkError("demand does not balance within a component")
    if support and not any(support <= comp for comp in comps):
        raise NetworkError("demand support spans multiple components")

    lap = _laplacian(net)
    phi = np.linalg.pinv(lap, rcond=1e-12) @ d
    residual = float(np.max(np.abs(lap @ phi - d)))
    if residual > net.config.tol_opt:
        raise NetworkError(f"Laplacian solve residual {residual:.2e}")
    flow = _flow_from_potential(net, phi)
    cons = float(np.max(np.abs(flow.divergence() - d)))
    if cons > net.config.tol_opt:
        raise NetworkError(f"flow conservation residual {cons:.2e}")
    return flow


def min_energy_flow_to_set(net: Network, sigma: Distribution,
                           marked: Iterable[Vertex]) -> Flow:
    """Minimum-energy unit flow from sigma into the vertex set M.

    The optimal sink distribution on M is found by grounding M: solve the
    Laplacian restricted to the complement, with phi = 0 on M.
    """
    marked = list(marked)
    if not marked:
        raise NetworkError("empty marked set")
    sig = sigma.as_vector(net)
    midx = [net.index(u) for u in marked]
    keep = np.array([i for i in range(net.n) if i not in set(midx)], dtype=int)
    phi = np.zeros(net.n)
    if keep.size:
        lap = _laplacian(net)
        sub = lap[np.ix_(keep, keep)]
        try:
            phi[keep] = np.linalg.solve(sub, sig[keep])
        except np.linalg.LinAlgError:
            raise NetworkError("sigma cannot reach the marked set") from None
        resid = float(np.max(np.abs(sub @ phi[keep] - sig[keep])))
        if resid > net.config.tol_opt * max(1.0, float(np.max(np.abs(sig)))):
            raise NetworkError(f"grounded Laplacian residual {resid:.2e}")
    return _flow_from_potential(net, phi)


def effective_resistance(net: Network, sigma: Distribution,
                         target) -> float:
    """R(sigma -> target): energy of the optimal flow.

    ``target`` is either a Distribution (fixed sink) or an iterable of
    vertices (sink distribution optimized over the set).
    """
    if isinstance(target, Distribution):
        demand = {u: sigma(u) - target(u)
                  for u in set(sigma.weights) | set(target.weights)}
        return min_energy_flow(net, demand).energy()
    return min_energy_flow_to_set(net, sigma, target).energy()


def commute_time(net: Network, sigma: Distribution, target) -> float:
    """C(sigma, M) = 2 W(G) R(sigma, M)."""
    return 2.0 * total_weight(net) * effective_resistance(net, sigma, target)


# -- Monte Carlo oracles ----------------------------------------------------

@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    walks: int
    seed: int
    truncated: int = 0

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        band = max(sigmas * self.stderr, 1e-12)
        return abs(self.estimate - value) <= band


def _shard_rng(seed: int, shard: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shard,)))


def _step(cum: np.ndarray, cur: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(cur.shape[0])
    return (cum[cur] < u[:, None]).sum(axis=1)


def _walk_until(cum: np.ndarray, cur: np.ndarray, stop_mask: np.ndarray,
                rng: np.random.Generator, max_steps: int):
    """Steps until each walker enters ``stop_mask``; walkers already there take 0."""
    steps = np.zeros(cur.shape[0], dtype=np.int64)
    active = ~stop_mask[cur]
    it = 0
    while active.any() and it < max_steps:
        cur[active] = _step(cum, cur[active], rng)
        steps[active] += 1
        active[active] = ~stop_mask[cur[active]]
        it += 1
    return steps, int(active.sum())


def hitting_time_mc(net: Network, start: Distribution, marked: Iterable[Vertex],
                    walks: int = 100_000, seed: int = 0,
                    max_steps: int = 200_000, shard_size: int = 1 << 15) -> MCEstimate:
    """Empirical mean number of steps from ``start`` to the marked set.

    Deterministic given (seed, shard layout); walkers that exceed
    ``max_steps`` are counted in ``truncated`` and kept at the cap.
    """
    marked = list(marked)
    if not marked:
        raise NetworkError("empty marked set")
    cum = np.cumsum(transition_matrix(net), axis=1)
    stop = np.zeros(net.n, dtype=bool)
    stop[[net.index(u) for u in marked]] = True
    p0 = start.as_vector(net)

    totals, sq_totals, truncated = 0.0, 0.0, 0
    done = 0
    shard = 0
    while done < walks:
        m = min(shard_size, walks - done)
        rng = _shard_rng(seed, shard)
        cur = rng.choice(net.n, size=m, p=p0)
        steps, trunc = _walk_until(cum, cur, stop, rng, max_steps)
        totals += float(steps.sum())
        sq_totals += float((steps.astype(float) ** 2).sum())
        truncated += trunc
        done += m
        shard += 1
    mean = totals / walks
    var = max(sq_totals / walks - mean ** 2, 0.0)
    return MCEstimate(mean, float(np.sqrt(var / walks)), walks, seed, truncated)


def commute_time_mc(net: Network, source: Vertex, marked: Iterable[Vertex],
                    walks: int = 100_000, seed: int = 0,
                    max_steps: int = 200_000, shard_size: int = 1 << 15) -> MCEstimate:
    """Empirical mean steps from ``source`` to the marked set and back."""
    marked = list(marked)
    if not marked:
        raise NetworkError("empty marked set")
    cum = np.cumsum(transition_matrix(net), axis=1)
    stop_m = np.zeros(net.n, dtype=bool)
    stop_m[[net.index(u) for u in marked]] = True
    stop_s = np.zeros(net.n, dtype=bool)
    stop_s[net.index(source)] = True

    totals, sq_totals, truncated = 0.0, 0.0, 0
    done, shard = 0, 0
    while done < walks:
        m = min(shard_size, walks - done)
        rng = _shard_rng(seed, shard)
        cur = np.full(m, net.index(source), dtype=int)
        out, t1 = _walk_until(cum, cur, stop_m, rng, max_steps)
        back, t2 = _walk_until(cum, cur, stop_s, rng, max_steps)
        steps = out + back
        totals += float(steps.sum())
        sq_totals += float((steps.astype(float) ** 2).sum())
        truncated += t1 + t2
        done += m
        shard += 1
    mean = totals / walks
    var = max(sq_totals / walks - mean ** 2, 0.0)
    return MCEstimate(mean, float(np.sqrt(var / walks)), walks, seed, truncated)


# -- I/O ---------------------------------------------------------------------

def network_from_dict(doc: Mapping) -> Network:
    """Build a Network from the JSON graph document."""
    edges = []
    for e in doc["edges"]:
        if "label_u" in e or "label_v" in e:
            edges.append((e["u"], e["v"], e["w"], e["label_u"], e["label_v"]))
        else:
            edges.append((e["u"], e["v"], e["w"]))
    return Network(doc["vertices"], edges)
