from .ans import allocate_and_evict, score_pair, select_networks, solve_ans
from .bnb import build_cost_matrix, solve_bnb, solve_exhaustive
from .qlearn import LearnConfig, QTable, reward, sinr_bin, solve_qlearn, train

SOLVERS = {"milp": solve_bnb, "ans": solve_ans, "qlearn": solve_qlearn}

__all__ = [
    "SOLVERS",
    "LearnConfig",
    "QTable",
    "allocate_and_evict",
    "build_cost_matrix",
    "reward",
    "score_pair",
    "select_networks",
    "sinr_bin",
    "solve_ans",
    "solve_bnb",
    "solve_exhaustive",
    "solve_qlearn",
    "train",
]
