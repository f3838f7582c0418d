"""Episodic control of the driven model and the DQN training round.

One episode covers the unit time interval split into 30 square-pulse
segments; each action picks the next segment's drive amplitude from
{0, omega_max/2, omega_max}.  The reward is +10 whenever the entanglement
witness increased over the segment and -1 otherwise.  Training is
closed-loop in simulation only: the product of a round is an open-loop
pulse sequence, replayed without the agent.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .dqn import (N_ACTIONS, OptimizerState, QNetwork, ReplayBuffer, select_action, td_step)
from .errors import EpisodeFinished, IntegrationDiverged
from .fock import ModelParams, coherent_product_state
from .lindblad import (DEFAULT_STEPS_PER_SEGMENT, Dissipation, PulseSequence, Trajectory,
                       checkpoint_state, propagate, run_segment, segment_generator)
from .measures import entanglement_witness, observe
from .spectral import ground_state_density

# Fixed affine normalization of the observation vector before it reaches
# the network: photon number down by 10, quadratic moments by 20.  Keeps
# inputs O(1) without data-dependent statistics.
OBS_SCALE = np.array([10.0, 1.0, 20.0, 1.0, 20.0, 1.0])

REWARD_UP = 10.0
REWARD_DOWN = -1.0


def normalize_observation(obs: np.ndarray) -> np.ndarray:
    return obs / OBS_SCALE


def reward_from_delta(delta_et: float) -> float:
    """+10 for a strict increase of the witness, -1 otherwise (ties included)."""
    return REWARD_UP if delta_et > 0.0 else REWARD_DOWN


def initial_state_density(kind: str, params: ModelParams, alpha: complex = 1.0) -> np.ndarray:
    """Initial state selector.

    "ground" (alias "hamiltonian_ground") is the ground state of the
    Hamiltonian at the params' own (static) drive amplitude;
    "coherent_down" is |alpha> (x) |down>.
    """
    if kind in ("ground", "hamiltonian_ground"):
        return ground_state_density(params)
    if kind == "coherent_down":
        return coherent_product_state(alpha, "down", params.m_trunc)
    raise ValueError(f"unknown initial state {kind!r}")


@dataclass(frozen=True)
class TrainConfig:
    """Everything one training round depends on."""

    params: ModelParams = ModelParams(g=0.3)
    omega_max: float = 0.3
    initial_state: str = "ground"
    coherent_alpha: complex = 1.0
    dissipation: Dissipation = Dissipation()
    seed: int = 0
    epochs: int = 100
    n_segments: int = 30
    total_time: float = 1.0
    steps_per_segment: int = DEFAULT_STEPS_PER_SEGMENT
    buffer_capacity: int = 10_000
    batch_size: int = 64
    discount: float = 0.99
    target_sync_interval: int = 100
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_epochs: int = 50
    # greedy evaluation rollouts (for action statistics) in the first and
    # last this-many epochs; 0 disables them
    greedy_eval_margin: int = 10

    def epsilon(self, epoch: int) -> float:
        frac = min(1.0, epoch / self.epsilon_decay_epochs)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac

    def static_params(self) -> ModelParams:
        """Model parameters of the undriven system the episodes start from."""
        return dataclasses.replace(self.params, omega=0.0)

    def pulse_from_actions(self, actions) -> PulseSequence:
        return PulseSequence.from_actions(actions, self.omega_max,
                                          n_segments=self.n_segments,
                                          total_time=self.total_time)


class PulseEnv:
    """Propagator-backed episodic environment over the 30 control segments."""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.amplitudes = PulseSequence.allowed_amplitudes(config.omega_max)
        params = config.static_params()
        self._generators = {
            amp: segment_generator(params, amp, config.dissipation)
            for amp in dict.fromkeys(self.amplitudes)
        }
        self._rho0 = initial_state_density(config.initial_state, params,
                                           config.coherent_alpha)
        self._dt = (config.total_time / config.n_segments) / config.steps_per_segment
        self._rho = None
        self.t = 0
        self.et_trajectory: list = []
        self.actions: list = []
        # positivity audit extrema across every episode of the round
        self.max_trace_err = 0.0
        self.min_eig_seen = 0.0

    def reset(self) -> np.ndarray:
        self._rho = self._rho0.copy()
        self.t = 0
        self.et_trajectory = [entanglement_witness(self._rho)]
        self.actions = []
        return observe(self._rho)

    def step(self, action: int):
        if self.t >= self.config.n_segments:
            raise EpisodeFinished("episode already covered all segments")
        amp = self.amplitudes[int(action)]
        self._rho = run_segment(self._rho, self._generators[amp],
                                self.config.steps_per_segment, self._dt)
        drift, min_eig = checkpoint_state(self._rho)
        self.max_trace_err = max(self.max_trace_err, drift)
        self.min_eig_seen = min(self.min_eig_seen, min_eig)
        et_new = entanglement_witness(self._rho)
        reward = reward_from_delta(et_new - self.et_trajectory[-1])
        self.et_trajectory.append(et_new)
        self.actions.append(int(action))
        self.t += 1
        done = self.t >= self.config.n_segments
        return observe(self._rho), reward, done

    @property
    def horizon(self) -> int:
        return self.config.n_segments

    def episode_score(self) -> float:
        """Time-averaged witness over the episode's segment boundaries."""
        return float(np.mean(self.et_trajectory))


@dataclass
class EpochRecord:
    epoch: int
    actions: tuple
    reward_sum: float
    score: float
    et_trajectory: np.ndarray | None


@dataclass
class TrainResult:
    config: TrainConfig
    epochs: list
    best_epoch: int
    best_actions: tuple
    best_score: float
    greedy_actions: dict = field(default_factory=dict)
    discarded_epochs: list = field(default_factory=list)
    max_trace_err: float | None = None
    min_eig_seen: float | None = None

    @property
    def best_pulse(self) -> PulseSequence:
        return self.config.pulse_from_actions(self.best_actions)


def _rollout(env, net: QNetwork, epsilon: float, rng, buffer=None,
             optimizer=None, config: TrainConfig | None = None,
             grad_counter: list | None = None):
    """One episode; learning happens only when buffer/optimizer are given."""
    obs = normalize_observation(env.reset())
    total_reward = 0.0
    actions = []
    done = False
    while not done:
        action = select_action(net, obs, epsilon, rng)
        raw_obs, reward, done = env.step(action)
        next_obs = normalize_observation(raw_obs)
        total_reward += reward
        actions.append(action)
        if buffer is not None:
            buffer.push(obs, action, reward, next_obs, done)
            if len(buffer) >= config.batch_size:
                td_step(net, buffer, optimizer, config.batch_size, config.discount)
                grad_counter[0] += 1
                if grad_counter[0] % config.target_sync_interval == 0:
                    net.sync_target()
        obs = next_obs
    return tuple(actions), total_reward


def train_round(config: TrainConfig, env=None) -> TrainResult:
    """Run one training round (default 100 epochs) and keep the best sequence.

    The best sequence is the executed episode maximizing the time-averaged
    witness (episode return for environments without one).  Epochs whose
    propagation diverges are discarded and logged; training continues.
    """
    rng = np.random.default_rng(config.seed)
    if env is None:
        env = PulseEnv(config)
    net = QNetwork(rng)
    buffer = ReplayBuffer(config.buffer_capacity, rng)
    optimizer = OptimizerState.for_params(net.params)
    grad_counter = [0]

    records: list = []
    greedy: dict = {}
    discarded: list = []
    best_idx, best_score = -1, -np.inf
    margin = config.greedy_eval_margin
    for epoch in range(config.epochs):
        epsilon = config.epsilon(epoch)
        try:
            actions, reward_sum = _rollout(env, net, epsilon, rng, buffer,
                                           optimizer, config, grad_counter)
        except IntegrationDiverged as err:
            discarded.append((epoch, str(err)))
            continue
        ets = getattr(env, "et_trajectory", None)
        if ets is not None and len(ets) > 0:
            score = float(np.mean(ets))
            ets = np.asarray(ets, dtype=float)
        else:
            score = reward_sum
            ets = None
        records.append(EpochRecord(epoch=epoch, actions=actions,
                                   reward_sum=reward_sum, score=score,
                                   et_trajectory=ets))
        if score > best_score:
            best_idx, best_score = epoch, score
        if margin > 0 and (epoch < margin or epoch >= config.epochs - margin):
            try:
                g_actions, _ = _rollout(env, net, 0.0, rng)
            except IntegrationDiverged:
                continue
            greedy[epoch] = g_actions
    if best_idx < 0:
        raise IntegrationDiverged("every epoch of the round diverged")
    best_actions = next(r.actions for r in records if r.epoch == best_idx)
    return TrainResult(config=config, epochs=records, best_epoch=best_idx,
                       best_actions=best_actions, best_score=best_score,
                       greedy_actions=greedy, discarded_epochs=discarded,
                       max_trace_err=getattr(env, "max_trace_err", None),
                       min_eig_seen=getattr(env, "min_eig_seen", None))


def train_and_replay(config: TrainConfig):
    """One training round plus the open-loop replay of its best sequence.

    Top-level so seed campaigns can dispatch it to worker processes.
    """
    result = train_round(config)
    return result, replay_best(result.best_pulse, config)


def replay_best(sequence: PulseSequence, config: TrainConfig) -> Trajectory:
    """Open-loop replay of a stored pulse; the dynamics being deterministic,
    this reproduces the closed-loop trajectory of the training episode."""
    params = config.static_params()
    rho0 = initial_state_density(config.initial_state, params, config.coherent_alpha)
    dt = sequence.segment_duration / config.steps_per_segment
    return propagate(rho0, sequence, params, config.dissipation, dt=dt)


# ---------------------------------------------------------------------------
# artifacts

def config_hash(config: TrainConfig) -> str:
    """Short stable fingerprint of a training configuration."""
    payload = json.dumps(_config_mapping(config), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _config_mapping(config: TrainConfig) -> dict:
    out = {}
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if dataclasses.is_dataclass(value):
            out[f.name] = {k: repr(v) for k, v in dataclasses.asdict(value).items()}
        else:
            out[f.name] = repr(value)
    return out


def write_training_log(result: TrainResult, path) -> None:
    """JSON-lines log, one record per epoch."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in result.epochs:
            fh.write(json.dumps({
                "epoch": rec.epoch,
                "return": rec.reward_sum,
                "time_averaged_ET": rec.score,
                "pulse_sequence": list(rec.actions),
            }) + "\n")


def write_best_sequence(result: TrainResult, path) -> None:
    """Plain-text artifact: header with omega_max and config hash, then the
    30 action indices."""
    header = (f"# omega_max={result.config.omega_max!r} "
              f"config_hash={config_hash(result.config)}")
    body = " ".join(str(a) for a in result.best_actions)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n" + body + "\n")


def read_best_sequence(path) -> tuple:
    """Returns (action indices, omega_max from the header)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    omega_max = None
    actions: list = []
    for ln in lines:
        if ln.startswith("#"):
            for token in ln[1:].split():
                if token.startswith("omega_max="):
                    omega_max = float(token.split("=", 1)[1])
        else:
            actions.extend(int(tok) for tok in ln.split())
    if omega_max is None:
        raise ValueError(f"{path}: missing omega_max header")
    if any(a not in range(N_ACTIONS) for a in actions):
        raise ValueError(f"{path}: action indices must be in 0..{N_ACTIONS - 1}")
    return tuple(actions), omega_max
