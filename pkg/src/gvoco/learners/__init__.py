from .base import OmdLearnerState, OptimisticOMD, local_estimate
from .meta import MetaState, OptimisticAdaMLProd, make_pea_losses, pea_regret, run_pea
from .universal import UniversalConfig, UniversalLearner, assemble

__all__ = [
    "OmdLearnerState", "OptimisticOMD", "local_estimate",
    "MetaState", "OptimisticAdaMLProd", "make_pea_losses", "run_pea", "pea_regret",
    "UniversalConfig", "UniversalLearner", "assemble",
]
