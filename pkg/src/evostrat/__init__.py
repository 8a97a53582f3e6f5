"""Evolution strategies with Adam-style momentum and dampening."""
from evostrat.optimizers import AdamESConfig, ESConfig
from evostrat.objectives import ObjectiveSpec, make_objective
from evostrat.runtime import AgentConfig, RunArtifacts, Trainer, train

__version__ = "0.1.0"

__all__ = [
    "AdamESConfig",
    "AgentConfig",
    "ESConfig",
    "ObjectiveSpec",
    "RunArtifacts",
    "Trainer",
    "make_objective",
    "train",
]
