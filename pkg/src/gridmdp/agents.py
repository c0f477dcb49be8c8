"""The baseline agent stack.

* ``DoNothingAgent`` -- the scoring anchor.
* ``ExpertAgent`` -- rule layer: reconnect any reconnectable line, otherwise
  do nothing while the worst line loading stays below ``safe_max_rho``,
  otherwise delegate to an attached policy.
* ``PolicyHead`` -- the trained network mapped onto continuous curtailment
  caps and storage setpoints, with the action limiter that keeps the demanded
  compensation within the controllable units' ramp headroom.
* ``train_ppo`` -- clipped-surrogate training with plain discounted-return
  advantages (no GAE, no entropy bonus) on the sparse survival reward.
* ``MixtureAgent`` -- one-step lookahead over candidate agents using the
  environment's ``simulate``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .actions import (
    Action,
    Composite,
    Curtail,
    DoNothing,
    SetLineStatus,
    SetStorage,
    curtail,
    set_storage,
)
from .env import Environment, Observation
from .grid import Grid

ORACLE = "oracle"


@dataclass
class ExpertRulesConfig:
    safe_max_rho: float = 0.99
    limit_cs_margin: float | str = 60.0   # MW, or "oracle" (env clips during training)

    def __post_init__(self):
        if not (0 < self.safe_max_rho <= 2):
            raise ValueError("safe_max_rho must lie in (0, 2]")
        if self.limit_cs_margin != ORACLE and float(self.limit_cs_margin) < 0:
            raise ValueError("limit_cs_margin must be >= 0 or 'oracle'")


@dataclass
class PpoConfig:
    gamma: float = 0.999
    clip_eps: float = 0.2
    batch_size: int = 16
    env_steps_per_update: int = 16
    epochs: int = 10
    learning_rate: float = 3e-6
    total_steps: int = 10_000
    hidden: tuple = (300, 300, 300)

    def __post_init__(self):
        if not (0 <= self.gamma <= 1):
            raise ValueError("gamma must lie in [0, 1]")
        if self.clip_eps <= 0:
            raise ValueError("clip epsilon must be positive")


# -- simple agents ---------------------------------------------------------

class DoNothingAgent:
    name = "do-nothing"

    def act(self, observation: Observation, env: Environment | None = None) -> Action:
        return DoNothing()


def reconnectable_lines(observation: Observation) -> list:
    """Line positions that are out, off cooldown and out of maintenance."""
    out = observation.line_status < 0.5
    free = observation.line_cooldown <= 0
    return [int(i) for i in np.flatnonzero(out & free)]


class ExpertAgent:
    """Reconnect > do-nothing > policy, in that priority order."""

    name = "expert"

    def __init__(self, grid: Grid, config: ExpertRulesConfig | None = None,
                 policy: "PolicyHead | None" = None):
        self.grid = grid
        self.config = config or ExpertRulesConfig()
        self.policy = policy

    def act(self, observation: Observation, env: Environment | None = None) -> Action:
        lines = reconnectable_lines(observation)
        if lines:
            return SetLineStatus(line=self.grid.lines[lines[0]].id, status=True)
        if observation.max_rho < self.config.safe_max_rho:
            return DoNothing()
        if self.policy is not None:
            return self.policy.propose(observation)[0]
        return DoNothing()


# -- action limiting --------------------------------------------------------

def limit_action(action: Action, observation: Observation, limit_cs_margin,
                 grid: Grid) -> Action:
    """Scale curtailment/storage so the compensation they demand stays below
    the available upward ramp headroom minus the configured margin.

    In ``"oracle"`` mode the action passes through untouched; the training
    environment clips instead.
    """
    if limit_cs_margin == ORACLE:
        return action
    if isinstance(action, Curtail):
        action = Composite(curtail=action)
    elif isinstance(action, SetStorage):
        action = Composite(storage=action)
    elif not isinstance(action, Composite):
        return action
    margin = float(limit_cs_margin)
    gen_pos = {g.id: j for j, g in enumerate(grid.generators)}
    p_max = {g.id: g.p_max for g in grid.generators}

    caps = dict(action.curtail.caps) if action.curtail is not None else {}
    powers = dict(action.storage.power_mw) if action.storage is not None else {}

    reductions = {}
    for gid, cap in caps.items():
        current = float(observation.gen_p[gen_pos[gid]])
        reductions[gid] = max(0.0, current - cap * p_max[gid])
    demand = sum(reductions.values()) + sum(powers.values())
    headroom = float(observation.redispatch_margin[0])
    allowed = max(0.0, headroom - margin)
    if demand <= allowed or demand <= 0:
        return action
    factor = allowed / demand
    if factor <= 0.0:
        return DoNothing()
    new_caps = {}
    for gid, cap in caps.items():
        if reductions[gid] > 0:
            current = float(observation.gen_p[gen_pos[gid]])
            new_caps[gid] = min(1.0, max(0.0, (current - factor * reductions[gid]) / p_max[gid]))
        else:
            new_caps[gid] = cap
    new_powers = {sid: factor * p for sid, p in powers.items()}
    return Composite(
        curtail=curtail(new_caps) if new_caps else None,
        storage=set_storage(new_powers) if new_powers else None,
    )


# -- policy -----------------------------------------------------------------

def observation_scales(grid: Grid) -> np.ndarray:
    """Fixed per-entry normalization for the policy input, derived from the
    grid's ratings so encoded magnitudes are O(1)."""
    gens = grid.generators
    parts = [
        np.ones(5),
        np.array([g.p_max for g in gens]),
        np.array([gens[grid.gen_index[gid]].p_max for gid in grid.renewable_ids]),
        np.full(len(grid.loads), max(g.p_max for g in gens)),
        np.array([l.thermal_limit for l in grid.lines]),
        np.ones(len(grid.lines)),          # rho
        np.ones(len(grid.lines)),          # status
        np.full(len(grid.lines), 3.0),     # cooldown
        np.array([s.e_max for s in grid.storages]),
        np.array([s.p_max for s in grid.storages]),
        np.ones(len(grid.renewable_ids)),  # caps
        np.full(2, 100.0),                 # margins
    ]
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


class PolicyHead:
    """Trained network plus the mapping from its (-1, 1) outputs onto
    curtailment caps ((a + 1) / 2 per renewable) and storage setpoints
    (a * p_max per storage)."""

    def __init__(self, params: nn.MlpParams, grid: Grid,
                 limit_cs_margin: float | str = 60.0,
                 deterministic: bool = True,
                 rng: np.random.Generator | None = None):
        self.params = params
        self.grid = grid
        self.limit_cs_margin = limit_cs_margin
        self.deterministic = deterministic
        self.rng = rng or np.random.default_rng(0)
        self.scales = observation_scales(grid)
        self.ren_ids = grid.renewable_ids
        self.sto_ids = [s.id for s in grid.storages]
        self.sto_p_max = np.array([s.p_max for s in grid.storages])

    @property
    def n_actions(self) -> int:
        return len(self.ren_ids) + len(self.sto_ids)

    def decode(self, a: np.ndarray) -> Composite:
        n_ren = len(self.ren_ids)
        caps = {gid: float((a[j] + 1.0) / 2.0) for j, gid in enumerate(self.ren_ids)}
        powers = {sid: float(a[n_ren + j] * self.sto_p_max[j])
                  for j, sid in enumerate(self.sto_ids)}
        return Composite(curtail=curtail(caps), storage=set_storage(powers))

    def propose(self, observation: Observation):
        """Returns (action, sample).  ``sample`` is None when deterministic."""
        x = observation.vector / self.scales
        if self.deterministic:
            mean, _, _ = nn.forward(self.params, x)
            raw = self.decode(np.tanh(mean))
            sample = None
        else:
            sample = nn.sample_policy(self.params, x, self.rng)
            raw = self.decode(sample.action)
        return limit_action(raw, observation, self.limit_cs_margin, self.grid), sample


class PolicyAgent:
    """The policy acting at every step (no expert rules)."""

    name = "policy"

    def __init__(self, head: PolicyHead):
        self.head = head

    def act(self, observation: Observation, env: Environment | None = None) -> Action:
        return self.head.propose(observation)[0]


# -- PPO mathematics ---------------------------------------------------------

def compute_advantages(rewards, values, gamma: float, dones=None):
    """Discounted return-to-go minus the value estimate, per step.

    The return sums the actual rewards to the end of the fragment (or to the
    episode boundary marked in ``dones``); nothing is bootstrapped.
    Returns (advantages, returns).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    n = len(rewards)
    if dones is None:
        dones = np.zeros(n, dtype=bool)
    else:
        dones = np.asarray(dones, dtype=bool)
    returns = np.zeros(n)
    running = 0.0
    for t in range(n - 1, -1, -1):
        running = rewards[t] + (0.0 if dones[t] else gamma * running)
        returns[t] = running
    return returns - values, returns


@dataclass
class Batch:
    obs: np.ndarray          # (B, D), already normalized
    pre_tanh: np.ndarray     # (B, A)
    old_log_prob: np.ndarray
    advantage: np.ndarray
    ret: np.ndarray

    def __len__(self):
        return len(self.obs)

    def take(self, idx) -> "Batch":
        return Batch(self.obs[idx], self.pre_tanh[idx], self.old_log_prob[idx],
                     self.advantage[idx], self.ret[idx])


def ppo_loss(params: nn.MlpParams, batch: Batch, clip_eps: float):
    """Clipped surrogate objective and critic MSE.

    Returns (policy_objective, value_mse, total_loss) with
    total_loss = -policy_objective + 0.5 * value_mse (to be minimized).
    """
    mean, log_std, value, _ = nn.forward_cache(params, batch.obs)
    logp = nn.log_prob_squashed(mean, log_std, batch.pre_tanh)
    ratio = np.exp(logp - batch.old_log_prob)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    objective = float(np.mean(np.minimum(batch.advantage * ratio,
                                         batch.advantage * clipped)))
    value_mse = float(np.mean((value - batch.ret) ** 2))
    return objective, value_mse, -objective + 0.5 * value_mse


def ppo_grad(params: nn.MlpParams, batch: Batch, clip_eps: float):
    """Exact gradients of the total PPO loss; returns (grads, stats)."""
    mean, log_std, value, cache = nn.forward_cache(params, batch.obs)
    logp = nn.log_prob_squashed(mean, log_std, batch.pre_tanh)
    ratio = np.exp(logp - batch.old_log_prob)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    surr_raw = batch.advantage * ratio
    surr_clip = batch.advantage * clipped
    n = len(batch)

    # d(total)/d(logp): only samples on the unclipped branch of the min carry
    # gradient; the clipped branch is locally constant in theta.
    active = surr_raw <= surr_clip
    d_logp = np.where(active, -batch.advantage * ratio, 0.0) / n

    d_mean_unit, d_logstd_unit = nn.log_prob_grads(mean, log_std, batch.pre_tanh)
    d_mean = d_logp[:, None] * d_mean_unit
    d_log_std = (d_logp[:, None] * d_logstd_unit).sum(axis=0)
    d_value = (value - batch.ret) / n   # from 0.5 * mean MSE

    grads = nn.backward(params, cache, d_mean, d_value, d_log_std)
    objective = float(np.mean(np.minimum(surr_raw, surr_clip)))
    value_mse = float(np.mean((value - batch.ret) ** 2))
    stats = {"policy_objective": objective, "value_mse": value_mse,
             "total_loss": -objective + 0.5 * value_mse,
             "mean_ratio": float(np.mean(ratio))}
    return grads, stats


# -- training ----------------------------------------------------------------

@dataclass
class TrainLog:
    updates: list = field(default_factory=list)
    episodes: int = 0
    env_steps: int = 0
    episode_lengths: list = field(default_factory=list)
    wall_clock_s: float = 0.0


def train_ppo(env_factory, ppo: PpoConfig | None = None,
              expert: ExpertRulesConfig | None = None, seed: int = 0):
    """Collect experience through the expert-rule wrapper and optimize the
    clipped objective.  Deterministic for a fixed seed.

    The advantage is the plain discounted return over the remainder of the
    episode minus the value estimate, so updates are applied once an episode
    finishes: its steps are processed as one optimization block per window
    of ``env_steps_per_update`` collected steps, each running ``epochs``
    passes of minibatch updates.  Nothing is bootstrapped.

    Returns (params, TrainLog).
    """
    ppo = ppo or PpoConfig()
    expert = expert or ExpertRulesConfig(safe_max_rho=0.2, limit_cs_margin=ORACLE)
    rng = np.random.default_rng(seed)
    started = time.perf_counter()

    env = env_factory()
    obs = env.reset()
    grid = env.grid
    n_actions = len(grid.renewable_ids) + len(grid.storages)
    params = nn.init_mlp(len(obs.vector), n_actions, hidden=ppo.hidden, rng=rng)
    head = PolicyHead(
        params=params,
        grid=grid,
        limit_cs_margin=expert.limit_cs_margin,
        deterministic=False,
        rng=rng,
    )
    adam = nn.AdamState.for_params(params)
    log = TrainLog()

    def process_episode(ep):
        """Advantages over the whole episode, then windowed updates."""
        nonlocal params, adam
        adv, rets = compute_advantages(ep["reward"], ep["value"], ppo.gamma, ep["done"])
        mask = np.asarray(ep["policy"], dtype=bool)
        if not mask.any():
            return
        stats = None
        window = ppo.env_steps_per_update
        for lo in range(0, len(mask), window):
            sel = np.zeros(len(mask), dtype=bool)
            sel[lo:lo + window] = mask[lo:lo + window]
            if not sel.any():
                continue
            batch = Batch(
                obs=np.asarray(ep["obs"])[sel],
                pre_tanh=np.asarray(ep["u"])[sel],
                old_log_prob=np.asarray(ep["logp"])[sel],
                advantage=adv[sel],
                ret=rets[sel],
            )
            for _ in range(ppo.epochs):
                order = rng.permutation(len(batch))
                for k in range(0, len(batch), ppo.batch_size):
                    mini = batch.take(order[k:k + ppo.batch_size])
                    grads, stats = ppo_grad(params, mini, ppo.clip_eps)
                    params, adam = nn.adam_step(params, grads, adam, ppo.learning_rate)
        head.params = params
        log.updates.append({
            "env_steps": log.env_steps,
            "episodes": log.episodes,
            "episode_len": len(mask),
            "mean_episode_len": (float(np.mean(log.episode_lengths))
                                 if log.episode_lengths else None),
            **(stats or {}),
        })

    episode = {k: [] for k in ("obs", "u", "logp", "value", "reward", "done", "policy")}
    log.env_steps = 0
    while log.env_steps < ppo.total_steps:
        lines = reconnectable_lines(obs)
        if lines:
            action, sample = SetLineStatus(line=grid.lines[lines[0]].id, status=True), None
        elif obs.max_rho < expert.safe_max_rho:
            action, sample = DoNothing(), None
        else:
            action, sample = head.propose(obs)
        result = env.step(action)
        x = obs.vector / head.scales
        episode["obs"].append(x)
        episode["reward"].append(result.reward)
        episode["done"].append(result.done)
        episode["policy"].append(sample is not None)
        if sample is not None:
            episode["u"].append(sample.pre_tanh)
            episode["logp"].append(sample.log_prob)
            episode["value"].append(sample.value)
        else:
            episode["u"].append(np.zeros(head.n_actions))
            episode["logp"].append(0.0)
            episode["value"].append(float(nn.forward(params, x)[2]))
        log.env_steps += 1
        if result.done:
            log.episodes += 1
            log.episode_lengths.append(len(episode["reward"]))
            process_episode(episode)
            episode = {k: [] for k in episode}
            env = env_factory()
            obs = env.reset()
        else:
            obs = result.observation

    if episode["reward"]:
        # budget ran out mid-episode: returns are cut at the budget boundary
        process_episode(episode)

    log.wall_clock_s = time.perf_counter() - started
    return params, log


# -- mixture of candidates -----------------------------------------------------

class MixtureAgent:
    """Pick, at every step, the candidate action whose one-step simulation
    looks best: survive first, then highest simulated reward, then lowest
    worst-line loading; ties go to the earlier candidate."""

    name = "mixture"

    def __init__(self, candidates: list):
        if not candidates:
            raise ValueError("mixture needs at least one candidate")
        self.candidates = list(candidates)
        self.last_decision: list = []

    def act(self, observation: Observation, env: Environment) -> Action:
        records = []
        for idx, agent in enumerate(self.candidates):
            action = agent.act(observation, env)
            sim = env.simulate(action)
            records.append({
                "candidate": idx,
                "action": action,
                "done": bool(sim.done),
                "reward": float(sim.reward),
                "max_rho": float(sim.observation.max_rho),
            })
        best = min(records, key=lambda r: (r["done"], -r["reward"], r["max_rho"], r["candidate"]))
        self.last_decision = records
        return best["action"]
