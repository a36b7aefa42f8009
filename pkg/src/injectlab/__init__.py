"""Online learning with abstention against clean-label injection.

Version-space learners that predict only when a potential drop certifies
the answer, the scores they use, adversaries, an exhaustive oracle and an
experiment harness.
"""

from .core import ABSTAIN, LabeledExample, run_episode, tally
from .learner import BootstrapHalfspaceLearner, PotentialLearner, auto_alpha

__all__ = [
    "ABSTAIN", "LabeledExample", "run_episode", "tally",
    "PotentialLearner", "BootstrapHalfspaceLearner", "auto_alpha",
]
__version__ = "0.1.0"
