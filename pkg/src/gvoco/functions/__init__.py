from .links import EPS_LINK, AffineLink, ConstantLink, LinkFunction, PowerLink, is_valid_link
from .losses import (ExponentialLoss, LinearLoss, OnlineFunction, QuadraticLoss, QuarticLoss,
                     ZeroLoss, function_from_params, query_link, sum_functions)
from .streams import (Stream, StreamConfig, VariationResult, best_in_hindsight, dump_stream,
                      gradient_variation, grid_minimize, load_stream, make_stream)

__all__ = [
    "EPS_LINK", "LinkFunction", "ConstantLink", "AffineLink", "PowerLink", "is_valid_link",
    "OnlineFunction", "ZeroLoss", "LinearLoss", "QuadraticLoss", "ExponentialLoss",
    "QuarticLoss", "sum_functions", "function_from_params", "query_link",
    "Stream", "StreamConfig", "VariationResult", "make_stream", "gradient_variation",
    "best_in_hindsight", "grid_minimize", "dump_stream", "load_stream",
]
