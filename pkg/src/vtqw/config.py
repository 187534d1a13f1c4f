"""Numeric tolerance policy and runtime knobs.

Construction-time invariants are checked at ``tol_construct``, optimization
residuals at ``tol_opt``, and state-algebra identities at ``tol_state``.
All thresholds that operationalize asymptotic conditions are explicit here
so reports can embed the exact configuration they ran under.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, asdict


def _env_max_dim() -> int:
    return int(os.environ.get("VTQW_MAX_DIM", 2 ** 14))


@dataclass(frozen=True)
class Config:
    # tolerances
    tol_construct: float = 1e-9     # unitarity, distributions, invariance
    tol_opt: float = 1e-8           # Laplacian/KKT residuals
    tol_state: float = 1e-10        # state-algebra identities
    gram_drop_tol: float = 1e-12    # Gram-Schmidt drop threshold
    phase_snap: float = 1e-12       # phases closer to 0 are snapped to 0

    # phase-estimation decision procedure
    kappa: float = 1.0 / 64.0       # phase window Delta = kappa / sqrt(C_minus)
    c_plus_cap: float = 50.0        # worst case allowed by the framework
    pe_reps: int = 4096             # circuit-mode repetitions
    max_ancilla_bits: int = 40

    # error-condition surrogates for the o(.) hypotheses
    ratio_threshold: float = 0.01   # P4*W and N2*R must stay below this
    eta: float = 1e-3               # composition error-condition constant

    # resource limits
    max_dim: int = field(default_factory=_env_max_dim)
    subroutine_t_cap: int = 63

    def tau_accept(self, c_plus_bound: float | None = None) -> float:
        """Acceptance threshold on the phase-0 mass, 1/(2 c+)."""
        c = self.c_plus_cap if c_plus_bound is None else c_plus_bound
        return 1.0 / (2.0 * c)

    def snapshot(self) -> dict:
        return asdict(self)


DEFAULT = Config()
