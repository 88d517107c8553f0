"""Training loop for fairness-filtered conditioned policies.

The agent collects trajectories by conditioning the policy network on
desired returns sampled near the replay buffer's non-dominated set, keeps
the buffer bounded by evicting the items with the worst distance-plus-
crowding score, and trains the network by imitation of the stored actions.
The dominance relation used for "non-dominated" throughout is controlled by
the filter mode and the blend parameter: ``pareto`` scores against the
Pareto front (the ablation mode), the three ``lorenz*`` modes against the
blended Lorenz front, with the shared reference-point variants replacing
each item's nearest-front target by one common optimistic target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dominance import (FrontSet, LAMBDA_LORENZ, PARETO, crowding_distance,
                        extract_front, transform_points)
from .metrics import MetricsRecord, front_metrics
from .network import (AdamState, PolicyParameters, TrainBatch, forward,
                      greedy_action, init_network, network_inputs,
                      sample_action, train_batch)

FILTER_MODES = ("pareto", "lorenz", "lorenz_redist", "lorenz_mean")


@dataclass
class AgentConfig:
    """Hyperparameters of one training run."""

    total_steps: int
    filter_mode: str = "lorenz"
    lam: float = 0.0
    buffer_size: int = 100
    batch_size: int = 256
    learning_rate: float = 0.01
    model_updates: int = 10
    episodes_per_iter: int = 10
    crowding_threshold: float = 0.2
    crowding_penalty: float = 1.0
    eval_period: int = 1000
    hidden_dims: tuple = (64, 64)
    optimizer: str = "sgd"
    seed: int = 0

    def validate(self) -> None:
        if self.filter_mode not in FILTER_MODES:
            raise ValueError(f"filter_mode must be one of {FILTER_MODES}, got {self.filter_mode!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        for name in ("total_steps", "buffer_size", "batch_size", "model_updates",
                     "episodes_per_iter", "eval_period"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.crowding_threshold < 0 or self.crowding_penalty < 0:
            raise ValueError("crowding parameters must be nonnegative")


def relation_for(filter_mode: str, lam: float):
    """(relation, lam) pair defining "non-dominated" for a filter mode."""
    if filter_mode == "pareto":
        return PARETO, None
    return LAMBDA_LORENZ, lam


@dataclass
class Trajectory:
    """One episode: stored transitions plus its return and length."""

    observations: np.ndarray   # (T, obs_dim)
    actions: np.ndarray        # (T,)
    rewards: np.ndarray        # (T, d)
    returns: np.ndarray = field(init=False)         # (d,) undiscounted sum
    future_returns: np.ndarray = field(init=False)  # (T, d) reward suffix sums

    def __post_init__(self):
        if len(self.actions) < 1:
            raise ValueError("a trajectory needs at least one transition")
        self.future_returns = np.cumsum(self.rewards[::-1], axis=0)[::-1].copy()
        self.returns = self.future_returns[0].copy()

    @property
    def length(self) -> int:
        return len(self.actions)


def score_experiences(returns: np.ndarray, filter_mode: str, lam: float,
                      crowding_threshold: float, crowding_penalty: float) -> np.ndarray:
    """Eviction score per buffer return; the highest-scored item leaves first.

    The base score is the Euclidean distance to a target return: the nearest
    non-dominated buffer return (``pareto``/``lorenz``), the equal
    redistribution of the highest-sum return (``lorenz_redist``), or the mean
    of the non-dominated returns (``lorenz_mean``). Items whose crowding
    distance falls at or below the threshold get their distance doubled plus
    a constant penalty.
    """
    returns = np.asarray(returns, dtype=float)
    relation, rel_lam = relation_for(filter_mode, lam)
    nd_idx = nondominated_indices(returns, relation, rel_lam)
    if filter_mode == "lorenz_redist":
        best = returns[int(np.argmax(returns.sum(axis=1)))]
        target = np.full(returns.shape[1], best.sum() / returns.shape[1])
        base = np.linalg.norm(returns - target, axis=1)
    elif filter_mode == "lorenz_mean":
        target = returns[nd_idx].mean(axis=0)
        base = np.linalg.norm(returns - target, axis=1)
    else:
        diffs = returns[:, None, :] - returns[nd_idx][None, :, :]
        base = np.linalg.norm(diffs, axis=2).min(axis=1)
    crowded = crowding_distance(returns) <= crowding_threshold
    return np.where(crowded, 2.0 * (base + crowding_penalty), base)


def nondominated_indices(returns: np.ndarray, relation: str, lam) -> np.ndarray:
    """Indices of returns not dominated by any other buffer return."""
    t = transform_points(returns, relation, lam)
    ge = t[:, None, :] >= t[None, :, :]
    eq = t[:, None, :] == t[None, :, :]
    dom = ge.all(axis=2) & ~eq.all(axis=2)
    return np.nonzero(~dom.any(axis=0))[0]


class ReplayBuffer:
    """Bounded trajectory store with dominance-aware eviction."""

    def __init__(self, capacity: int, filter_mode: str, lam: float,
                 crowding_threshold: float, crowding_penalty: float):
        if capacity < 1:
            raise ValueError("buffer capacity must be positive")
        self.capacity = capacity
        self.filter_mode = filter_mode
        self.lam = lam
        self.crowding_threshold = crowding_threshold
        self.crowding_penalty = crowding_penalty
        self.items: list[Trajectory] = []

    def __len__(self) -> int:
        return len(self.items)

    def returns_matrix(self) -> np.ndarray:
        return np.asarray([t.returns for t in self.items])

    def scores(self) -> np.ndarray:
        return score_experiences(self.returns_matrix(), self.filter_mode, self.lam,
                                 self.crowding_threshold, self.crowding_penalty)

    def nondominated(self) -> np.ndarray:
        relation, lam = relation_for(self.filter_mode, self.lam)
        return nondominated_indices(self.returns_matrix(), relation, lam)

    def insert(self, traj: Trajectory) -> None:
        self.items.append(traj)
        while len(self.items) > self.capacity:
            evict = int(np.argmax(self.scores()))
            del self.items[evict]


def choose_desired_return(buffer: ReplayBuffer, rng: np.random.Generator):
    """Sample a conditioning target above a non-dominated buffer return.

    Per-objective noise is uniform in [0, sigma] where sigma is the standard
    deviation of the buffer's non-dominated returns; the desired horizon is
    the sampled trajectory's length.
    """
    if len(buffer) == 0:
        raise ValueError("cannot choose a desired return from an empty buffer")
    nd_idx = buffer.nondominated()
    nd_returns = buffer.returns_matrix()[nd_idx]
    sigma = nd_returns.std(axis=0)
    pick = nd_idx[int(rng.integers(len(nd_idx)))]
    desired = buffer.items[pick].returns + rng.uniform(0.0, 1.0, size=sigma.size) * sigma
    return desired, buffer.items[pick].length


def run_episode(params: PolicyParameters, env, desired_return, desired_horizon,
                explore: bool, rng: np.random.Generator | None = None) -> Trajectory:
    """Roll out one episode, re-conditioning on the remaining target each step."""
    if explore and rng is None:
        raise ValueError("exploration requires an rng")
    obs, mask = env.reset()
    desired = np.asarray(desired_return, dtype=float).copy()
    horizon = float(desired_horizon)
    observations, actions, rewards = [], [], []
    done = False
    while not done:
        dist = forward(params, obs, horizon / env.max_episode_len,
                       desired / env.return_scale)
        if explore:
            action = sample_action(dist, rng, mask)
        else:
            action = greedy_action(dist, mask)
        observations.append(obs)
        actions.append(action)
        obs, reward, done, mask = env.step(action)
        rewards.append(reward)
        desired = desired - reward
        horizon = max(horizon - 1.0, 1.0)
    return Trajectory(observations=np.asarray(observations),
                      actions=np.asarray(actions, dtype=int),
                      rewards=np.asarray(rewards))


def random_episode(env, rng: np.random.Generator) -> Trajectory:
    """Roll out uniformly random allowed actions (warmup exploration)."""
    obs, mask = env.reset()
    observations, actions, rewards = [], [], []
    done = False
    while not done:
        allowed = np.nonzero(mask)[0]
        action = int(allowed[rng.integers(len(allowed))])
        observations.append(obs)
        actions.append(action)
        obs, reward, done, mask = env.step(action)
        rewards.append(reward)
    return Trajectory(observations=np.asarray(observations),
                      actions=np.asarray(actions, dtype=int),
                      rewards=np.asarray(rewards))


def sample_batch(buffer: ReplayBuffer, batch_size: int,
                 env, rng: np.random.Generator) -> TrainBatch:
    """Uniform sample of transitions; labels condition on realized futures.

    Each sampled transition becomes (observation, remaining length, return
    actually obtained from that step onward) -> action taken.
    """
    lengths = np.asarray([t.length for t in buffer.items])
    cumulative = np.cumsum(lengths)
    flat = rng.integers(cumulative[-1], size=batch_size)
    traj_idx = np.searchsorted(cumulative, flat, side="right")
    step_idx = flat - (cumulative[traj_idx] - lengths[traj_idx])
    obs = np.stack([buffer.items[i].observations[t] for i, t in zip(traj_idx, step_idx)])
    horizons = (lengths[traj_idx] - step_idx) / env.max_episode_len
    futures = np.stack([buffer.items[i].future_returns[t]
                        for i, t in zip(traj_idx, step_idx)]) / env.return_scale
    labels = np.asarray([buffer.items[i].actions[t] for i, t in zip(traj_idx, step_idx)])
    return TrainBatch(observations=obs, horizons=horizons,
                      desired_returns=futures, actions=labels)


def evaluate_front(params: PolicyParameters, env, buffer: ReplayBuffer):
    """Greedy rollouts conditioned on each non-dominated buffer return.

    Returns the front of the executed returns (under the buffer's relation)
    together with the full matrix of executed returns.
    """
    if len(buffer) == 0:
        raise ValueError("cannot evaluate with an empty buffer")
    relation, lam = relation_for(buffer.filter_mode, buffer.lam)
    executed = []
    for idx in buffer.nondominated():
        item = buffer.items[idx]
        traj = run_episode(params, env, item.returns, item.length, explore=False)
        executed.append(traj.returns)
    executed = np.asarray(executed)
    return extract_front(executed, relation, lam), executed


@dataclass
class TrainResult:
    params: PolicyParameters
    logs: list           # MetricsRecord per evaluation
    front: FrontSet      # final evaluation front
    executed: np.ndarray  # final executed returns
    buffer: ReplayBuffer


def train(config: AgentConfig, env, ref_point, n_weights: int = 100) -> TrainResult:
    """Run the full collect/filter/imitate loop for ``config.total_steps``.

    Warmup fills the buffer with random episodes (at most twice the buffer
    capacity). Each iteration collects conditioned episodes, inserts them,
    and applies ``model_updates`` imitation steps; an evaluation snapshot is
    logged every ``eval_period`` environment steps and once at the end.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    params = init_network(env.obs_dim, env.n_objectives, env.n_actions,
                          config.hidden_dims, seed=config.seed)
    adam = AdamState.for_params(params) if config.optimizer == "adam" else None
    buffer = ReplayBuffer(config.buffer_size, config.filter_mode, config.lam,
                          config.crowding_threshold, config.crowding_penalty)
    ref_point = np.asarray(ref_point, dtype=float)

    steps = 0
    warmup_episodes = 0
    while (len(buffer) < config.buffer_size and warmup_episodes < 2 * config.buffer_size
           and steps < config.total_steps):
        traj = random_episode(env, rng)
        buffer.insert(traj)
        steps += traj.length
        warmup_episodes += 1

    logs: list[MetricsRecord] = []
    next_eval = config.eval_period * (steps // config.eval_period + 1)

    def snapshot(at_step: int):
        front, _ = evaluate_front(params, env, buffer)
        logs.append(front_metrics(front, ref_point, n_weights, step=at_step))

    while steps < config.total_steps:
        for _ in range(config.episodes_per_iter):
            desired, horizon = choose_desired_return(buffer, rng)
            traj = run_episode(params, env, desired, horizon, explore=True, rng=rng)
            buffer.insert(traj)
            steps += traj.length
            if steps >= config.total_steps:
                break
        for _ in range(config.model_updates):
            batch = sample_batch(buffer, config.batch_size, env, rng)
            train_batch(params, batch, config.learning_rate, adam=adam)
        if steps >= next_eval:
            snapshot(steps)
            next_eval = config.eval_period * (steps // config.eval_period + 1)

    front, executed = evaluate_front(params, env, buffer)
    logs.append(front_metrics(front, ref_point, n_weights, step=steps))
    return TrainResult(params=params, logs=logs, front=front,
                       executed=executed, buffer=buffer)
