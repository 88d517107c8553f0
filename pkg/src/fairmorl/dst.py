"""Deep-sea treasure gridworld: treasure value versus time cost.

An 11x10 grid of sea cells over a stepped seabed. The submarine starts at
the top-left surface cell; every move costs one time unit and entering a
treasure cell ends the episode with that treasure's value. Treasure values
grow with depth, so longer routes trade time for value.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .dominance import FrontSet, PARETO, extract_front

N_ROWS = 11
N_COLS = 10

# Deepest sea row per column; the cell at that row holds the treasure.
TREASURE_ROWS = (1, 2, 3, 4, 4, 4, 7, 7, 9, 10)
TREASURE_VALUES = (1.0, 2.0, 3.0, 5.0, 8.0, 16.0, 24.0, 50.0, 74.0, 124.0)

# up, down, left, right
ACTIONS = ((-1, 0), (1, 0), (0, -1), (0, 1))
N_ACTIONS = 4


def is_sea(row: int, col: int) -> bool:
    """True for in-grid cells at or above the seabed (treasure cells included)."""
    return 0 <= row < N_ROWS and 0 <= col < N_COLS and row <= TREASURE_ROWS[col]


def treasure_at(row: int, col: int) -> float:
    """Treasure value of a cell, 0.0 for plain sea."""
    if 0 <= col < N_COLS and row == TREASURE_ROWS[col]:
        return TREASURE_VALUES[col]
    return 0.0


def dst_reset() -> tuple[int, int]:
    """Initial submarine position: top-left surface cell."""
    return (0, 0)


def dst_step(position: tuple[int, int], action: int):
    """Advance one step; blocked moves keep the position but still cost time.

    Returns ``(position, reward, done)`` where reward is
    ``(treasure value, -1)`` and ``done`` is True on a treasure cell.
    """
    if not 0 <= action < N_ACTIONS:
        raise ValueError(f"invalid action {action}")
    dr, dc = ACTIONS[action]
    row, col = position[0] + dr, position[1] + dc
    if not is_sea(row, col):
        row, col = position
    value = treasure_at(row, col)
    reward = np.array([value, -1.0])
    return (row, col), reward, value > 0.0


def dst_true_pareto_front() -> FrontSet:
    """Optimal (treasure, -time) pairs, one per treasure, via BFS shortest paths."""
    dist = {dst_reset(): 0}
    queue = deque([dst_reset()])
    while queue:
        cell = queue.popleft()
        if treasure_at(*cell) > 0.0:
            continue  # episodes end here; do not path through treasures
        for dr, dc in ACTIONS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if is_sea(*nxt) and nxt not in dist:
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    points = [
        (TREASURE_VALUES[c], -float(dist[(TREASURE_ROWS[c], c)]))
        for c in range(N_COLS)
    ]
    return extract_front(np.asarray(points), PARETO)


class DeepSeaTreasureEnv:
    """Episodic wrapper with a step cap, one-hot observations, trivial masks."""

    n_actions = N_ACTIONS
    n_objectives = 2
    obs_dim = N_ROWS * N_COLS

    def __init__(self, step_cap: int = 100):
        if step_cap < 1:
            raise ValueError("step cap must be positive")
        self.step_cap = step_cap
        self.max_episode_len = step_cap
        self.return_scale = np.array([TREASURE_VALUES[-1], float(step_cap)])
        self._pos = dst_reset()
        self._steps_left = step_cap

    def _observe(self) -> np.ndarray:
        obs = np.zeros(self.obs_dim)
        obs[self._pos[0] * N_COLS + self._pos[1]] = 1.0
        return obs

    def _mask(self) -> np.ndarray:
        return np.ones(self.n_actions, dtype=bool)

    def reset(self):
        self._pos = dst_reset()
        self._steps_left = self.step_cap
        return self._observe(), self._mask()

    def step(self, action: int):
        self._pos, reward, done = dst_step(self._pos, action)
        self._steps_left -= 1
        if self._steps_left <= 0:
            done = True
        return self._observe(), reward, done, self._mask()
