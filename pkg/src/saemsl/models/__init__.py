"""Benchmark data-generating models behind a common simulator interface."""

from .base import (JointSummaryLayout, LatentPath, ObsSeries, ParamSpace,
                   SummaryError, Transform, shifted_log)
from .gk import GkModel
from .nlg import NlgModel
from .theophylline import TheophyllineModel, sigma_hat_qv

_REGISTRY = {
    "nlg": NlgModel,
    "theophylline": TheophyllineModel,
    "gk": GkModel,
}


def get_model(name: str, **overrides):
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown model '{name}' (have {sorted(_REGISTRY)})") from None
    return cls(**overrides)


__all__ = [
    "GkModel", "JointSummaryLayout", "LatentPath", "NlgModel", "ObsSeries",
    "ParamSpace", "SummaryError", "TheophyllineModel", "Transform",
    "get_model", "shifted_log", "sigma_hat_qv",
]
