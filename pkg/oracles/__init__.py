"""
Oracles - independent checks for the closed-form scheduler
Contains: Markov-chain steady state + simulation, truncated-MDP value iteration
"""

from .chain_oracle import oracle_cost, simulate, greedy_simulate, steady_state
from .mdp_oracle import discounted_vi, rvi, extract_threshold, TruncatedMdp

__all__ = [
    'oracle_cost',
    'simulate',
    'greedy_simulate',
    'steady_state',
    'discounted_vi',
    'rvi',
    'extract_threshold',
    'TruncatedMdp',
]
