from .games import (BilinearGame, OperatorFunction, QuarticGame, SaddleProblem, average_iterate,
                    game_from_config, saddle_round, solve_saddle)
from .sea import SeaEnvironment, SeaResult, evaluation_grid, sea_run, variance_estimates

__all__ = [
    "SaddleProblem", "BilinearGame", "QuarticGame", "OperatorFunction", "solve_saddle",
    "saddle_round", "average_iterate", "game_from_config",
    "SeaEnvironment", "SeaResult", "evaluation_grid", "variance_estimates", "sea_run",
]
