"""Numerical laboratory for variable-time quantum walk and algorithm composition.

Subpackages follow the pipeline: ``network`` (graphs, flows, electric
quantities), ``subroutine`` (variable-time reversible subroutines),
``vt_states`` (transition and history states), ``phase_estimation``
(instances, witnesses, the decision rule), ``walk_compose`` (edge-composed
quantum walks), ``frameworks`` (search, checking-cost claims, MNRS), and
``alg_compose`` (outer-algorithm composition). ``cli`` ties them to scenario
files.
"""

from .config import Config, DEFAULT

__all__ = ["Config", "DEFAULT"]
__version__ = "0.1.0"
