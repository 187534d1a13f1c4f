"""Phase-estimation instances, witness verification, and the decision rule.

An instance is (H, psi0, Psi_A, Psi_B) with derived projectors Pi_A, Pi_B
and walk operator U = (2 Pi_A - I)(2 Pi_B - I). The decision procedure
estimates the squared mass of psi0 on eigenvectors of U with phase within
Delta = kappa / sqrt(C-) of zero, and accepts (positive) when that mass
clears 1/(2 c+).

The framework interface leaves its internal constants to the cited prior
work, so kappa and the acceptance threshold are configuration, calibrated
on the randomized suite; diagnostics expose all margins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _linalg
from .config import DEFAULT, Config


class InstanceError(ValueError):
    """Raised when an instance or witness violates its contract."""


class PhaseEstimationInstance:
    """Container for (H, psi0, Psi_A, Psi_B) with derived operators.

    ``psi_a`` and ``psi_b`` are (dim, k) column matrices. By default psi0
    must be a unit vector orthogonal to span(Psi_B); assembled walk and
    composition instances intentionally overlap their source-gadget states
    in Psi_B, so they construct with ``require_psi0_orthogonal=False`` and
    the measured overlap is kept as a diagnostic.
    """

    def __init__(self, psi0: np.ndarray, psi_a: np.ndarray, psi_b: np.ndarray,
                 *, require_psi0_orthogonal: bool = True,
                 config: Config = DEFAULT):
        self.config = config
        self.psi0 = np.asarray(psi0, dtype=complex)
        self.dim = self.psi0.shape[0]
        if self.dim > config.max_dim:
            raise InstanceError(f"dimension {self.dim} exceeds cap {config.max_dim}")
        self.psi_a = np.asarray(psi_a, dtype=complex).reshape(self.dim, -1)
        self.psi_b = np.asarray(psi_b, dtype=complex).reshape(self.dim, -1)

        norm = float(np.linalg.norm(self.psi0))
        if abs(norm - 1.0) > config.tol_state * 10:
            raise InstanceError(f"psi0 has norm {norm}")

        self._qa = _linalg.orthonormal_columns(self.psi_a, config.gram_drop_tol)
        self._qb = _linalg.orthonormal_columns(self.psi_b, config.gram_drop_tol)
        self.psi0_b_overlap = float(np.linalg.norm(self._qb.conj().T @ self.psi0))
        if require_psi0_orthogonal and self.psi0_b_overlap > config.tol_state:
            raise InstanceError(
                f"psi0 overlaps span(Psi_B) by {self.psi0_b_overlap:.2e}")

        self._u = None
        self._phases = None
        self._weights = None

    # -- operators -----------------------------------------------------------

    def project_a(self, vec: np.ndarray) -> np.ndarray:
        return self._qa @ (self._qa.conj().T @ vec)

    def project_b(self, vec: np.ndarray) -> np.ndarray:
        return self._qb @ (self._qb.conj().T @ vec)

    def walk_operator(self) -> np.ndarray:
        """U = (2 Pi_A - I)(2 Pi_B - I)."""
        if self._u is None:
            eye = np.eye(self.dim, dtype=complex)
            ra = 2.0 * (self._qa @ self._qa.conj().T) - eye
            rb = 2.0 * (self._qb @ self._qb.conj().T) - eye
            self._u = ra @ rb
        return self._u

    def unitarity_defect(self) -> float:
        return _linalg.unitarity_defect(self.walk_operator())

    def spectrum(self):
        """Eigenphases of U and the squared overlaps of psi0 with them."""
        if self._phases is None:
            phases, vecs = _linalg.eigenphases(self.walk_operator(),
                                               snap=self.config.phase_snap)
            amps = vecs.conj().T @ self.psi0
            order = np.argsort(np.abs(phases), kind="stable")
            self._phases = phases[order]
            self._weights = np.abs(amps[order]) ** 2
        return self._phases, self._weights

    def phase_mass(self, delta: float) -> float:
        """m(delta) = |Pi_{|phase| <= delta} psi0|^2."""
        phases, weights = self.spectrum()
        return float(np.sum(weights[np.abs(phases) <= delta]))


# -- witnesses -----------------------------------------------------------------

@dataclass(frozen=True)
class WitnessCertificate:
    """Measured error and complexity of a verified witness."""

    kind: str                      # "positive" | "negative"
    delta: float                   # delta (positive) or delta' (negative)
    complexity: float              # c+ realized, or |w_A|^2
    overlap: complex = 0.0         # <psi0|w> for positive witnesses
    extras: dict = field(default_factory=dict)


def verify_positive_witness(inst: PhaseEstimationInstance,
                            w: np.ndarray) -> WitnessCertificate:
    """delta = max(|Pi_A w|^2, |Pi_B w|^2)/|w|^2 and c+ = |w|^2/|<w|psi0>|^2."""
    w = np.asarray(w, dtype=complex)
    norm2 = float(np.vdot(w, w).real)
    if norm2 <= 0.0:
        raise InstanceError("zero positive witness")
    overlap = complex(np.vdot(inst.psi0, w))
    if abs(overlap) ** 2 <= inst.config.tol_state * norm2:
        raise InstanceError("witness is orthogonal to psi0")
    pa = inst.project_a(w)
    pb = inst.project_b(w)
    delta = max(float(np.vdot(pa, pa).real), float(np.vdot(pb, pb).real)) / norm2
    c_plus = norm2 / abs(overlap) ** 2
    return WitnessCertificate("positive", delta, c_plus, overlap)


def verify_negative_witness(inst: PhaseEstimationInstance, w_a: np.ndarray,
                            w_b: np.ndarray) -> WitnessCertificate:
    """delta' = max(|(I-Pi_A) w_A|^2, |(I-Pi_B) w_B|^2); C- = |w_A|^2.

    Requires w_A + w_B = psi0 within the construction tolerance.
    """
    w_a = np.asarray(w_a, dtype=complex)
    w_b = np.asarray(w_b, dtype=complex)
    split = float(np.max(np.abs(w_a + w_b - inst.psi0)))
    if split > inst.config.tol_construct:
        raise InstanceError(f"w_A + w_B misses psi0 by {split:.2e}")
    ra = w_a - inst.project_a(w_a)
    rb = w_b - inst.project_b(w_b)
    delta = max(float(np.vdot(ra, ra).real), float(np.vdot(rb, rb).real))
    return WitnessCertificate("negative", delta, float(np.vdot(w_a, w_a).real),
                              extras={"split_residual": split})


def theorem_error_caps(c_plus: float, c_minus: float) -> tuple[float, float]:
    """The framework's admissible witness errors for given (c+, C-)."""
    delta_cap = 1.0 / ((8.0 * c_plus) ** 3 * np.pi ** 8 * c_minus)
    delta_prime_cap = 0.75 / (np.pi ** 4 * c_plus)
    return delta_cap, delta_prime_cap


# -- decision -------------------------------------------------------------------

@dataclass(frozen=True)
class Decision:
    positive: bool
    mode: str
    delta: float
    m_delta: float
    tau_accept: float
    query_estimate: float
    diagnostics: dict

    @property
    def label(self) -> str:
        return "positive" if self.positive else "negative"


def _phase_histogram(phases: np.ndarray, weights: np.ndarray,
                     bins: int = 16) -> list:
    edges = np.linspace(0.0, np.pi, bins + 1)
    hist, _ = np.histogram(np.abs(phases), bins=edges, weights=weights)
    return [[float(edges[k]), float(edges[k + 1]), float(hist[k])]
            for k in range(bins)]


def decide(inst: PhaseEstimationInstance, c_minus: float,
           c_plus_bound: float | None = None, mode: str = "spectral",
           seed: int = 0, *, kappa: float | None = None,
           tau_accept: float | None = None, reps: int | None = None) -> Decision:
    """Distinguish the positive and negative promise cases.

    Spectral mode eigendecomposes U and thresholds the phase mass
    m(Delta) at Delta = kappa / sqrt(C-). Circuit mode draws the outcome
    statistics of textbook phase estimation with ceil(log2(1/Delta)) + 2
    ancilla bits and thresholds the observed frequency of outcome 0.
    """
    cfg = inst.config
    if c_minus < 1.0:
        raise InstanceError("C- must be at least 1")
    kappa = cfg.kappa if kappa is None else kappa
    tau = cfg.tau_accept(c_plus_bound) if tau_accept is None else tau_accept
    delta = kappa / np.sqrt(c_minus)
    phases, weights = inst.spectrum()
    m_delta = inst.phase_mass(delta)
    caps = theorem_error_caps(
        cfg.c_plus_cap if c_plus_bound is None else c_plus_bound, c_minus)
    diagnostics = {
        "phase_histogram": _phase_histogram(phases, weights),
        "m_zero": inst.phase_mass(0.0),
        "psi0_b_overlap": inst.psi0_b_overlap,
        "unitarity_defect": inst.unitarity_defect(),
        "delta_cap": caps[0],
        "delta_prime_cap": caps[1],
        "margin": m_delta - tau,
    }

    if mode == "spectral":
        positive = m_delta >= tau
        return Decision(positive, mode, float(delta), m_delta, tau,
                        float(1.0 / delta), diagnostics)

    if mode == "circuit":
        bits = int(np.ceil(np.log2(1.0 / delta))) + 2
        if bits > cfg.max_ancilla_bits:
            raise InstanceError(f"{bits} ancilla bits exceed the cap")
        reps = cfg.pe_reps if reps is None else reps
        p_zero = float(np.sum(weights * _linalg.kitaev_kernel(phases, bits)))
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        hits = int(rng.binomial(reps, min(max(p_zero, 0.0), 1.0)))
        freq = hits / reps
        positive = freq >= tau / 2.0
        diagnostics.update({"ancilla_bits": bits, "p_zero": p_zero,
                            "reps": reps, "hits": hits, "frequency": freq})
        return Decision(positive, mode, float(delta), m_delta, tau / 2.0,
                        float(reps * (2 ** bits - 1)), diagnostics)

    raise InstanceError(f"unknown decision mode {mode!r}")


def instance_from_dict(doc: Mapping, *, config: Config = DEFAULT,
                       require_psi0_orthogonal: bool = True) -> PhaseEstimationInstance:
    """Build an instance from the JSON document with [re, im] pair vectors."""

    def vec(pairs):
        return np.array([complex(re, im) for re, im in pairs])

    dim = int(doc["dimension"])
    psi0 = vec(doc["psi0"])
    psi_a = _linalg.as_column_matrix([vec(v) for v in doc.get("psi_A", [])], dim)
    psi_b = _linalg.as_column_matrix([vec(v) for v in doc.get("psi_B", [])], dim)
    return PhaseEstimationInstance(
        psi0, psi_a, psi_b, config=config,
        require_psi0_orthogonal=require_psi0_orthogonal)
