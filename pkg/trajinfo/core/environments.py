"""基准环境（确定性 MDP）

约定：
- 所有环境的 `step` 与 `query` 是同一个纯函数：先裁剪动作，再积分一步。
- 奖励函数已知，签名为 r(s, a, s')，对批量输入按最后一维向量化。
- 角度维度列在 `EnvSpec.periodic_dims` 中，始终环绕到 [−π, π)。
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

from trajinfo.errors import InvalidStateError
from trajinfo.utils.numeric import make_rng, wrap_periodic


@dataclass(frozen=True)
class EnvSpec:
    """Static description of an environment"""

    name: str
    state_dim: int
    action_dim: int
    horizon: int
    action_low: np.ndarray
    action_high: np.ndarray
    state_low: np.ndarray
    state_high: np.ndarray
    periodic_dims: Tuple[int, ...] = ()
    fixed_start: bool = False

    def __post_init__(self):
        for name in ("action_low", "action_high", "state_low", "state_high"):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def action_range(self) -> np.ndarray:
        return self.action_high - self.action_low


class Environment(ABC):
    """Base class: deterministic dynamics plus a known reward"""

    spec: EnvSpec

    @abstractmethod
    def _dynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Next states for (M, d_s) states and clipped (M, d_a) actions"""

    @abstractmethod
    def reward_batch(self, states: np.ndarray, actions: np.ndarray, next_states: np.ndarray) -> np.ndarray:
        """Vectorized r(s, a, s') over leading dimensions"""

    @abstractmethod
    def _sample_start(self, rng: np.random.Generator) -> np.ndarray:
        ...

    @property
    def name(self) -> str:
        return self.spec.name

    def reset(self, seed: int) -> np.ndarray:
        """Start state; deterministic given ``seed``"""
        return wrap_periodic(self._sample_start(make_rng(seed, 0x5EED)), self.spec.periodic_dims)

    def clip_action(self, actions: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(actions, dtype=float), self.spec.action_low, self.spec.action_high)

    def step_batch(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Next states for states (..., d_s) and actions (..., d_a)"""
        states = np.asarray(states, dtype=float)
        actions = np.asarray(actions, dtype=float)
        if np.isnan(states).any() or np.isnan(actions).any():
            raise InvalidStateError(f"{self.name}: NaN in state or action input")
        flat_states = states.reshape(-1, self.spec.state_dim)
        flat_actions = self.clip_action(actions.reshape(-1, self.spec.action_dim))
        next_states = self._dynamics(flat_states, flat_actions)
        return wrap_periodic(next_states, self.spec.periodic_dims).reshape(states.shape)

    def step(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        if state.shape != (self.spec.state_dim,):
            raise ValueError(f"{self.name}: expected state of shape ({self.spec.state_dim},), got {state.shape}")
        return self.step_batch(state[None], np.reshape(action, (1, -1)))[0]

    def query(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        """Transition at an arbitrary (state, action); identical to ``step``"""
        return self.step(state, action)

    def reward(self, state, action, next_state) -> float:
        return float(
            self.reward_batch(
                np.asarray(state, dtype=float),
                self.clip_action(action),
                np.asarray(next_state, dtype=float),
            )
        )

    def sample_state_actions(self, rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray]:
        """Uniform draws over the state box and the action bounds"""
        spec = self.spec
        states = rng.uniform(spec.state_low, spec.state_high, size=(count, spec.state_dim))
        actions = rng.uniform(spec.action_low, spec.action_high, size=(count, spec.action_dim))
        return states, actions


class Pendulum(Environment):
    """Torque-limited pendulum swing-up (θ = 0 upright)"""

    gravity = 10.0
    mass = 1.0
    length = 1.0
    dt = 0.05
    max_speed = 8.0
    max_torque = 2.0

    def __init__(self):
        self.spec = EnvSpec(
            name="pendulum",
            state_dim=2,
            action_dim=1,
            horizon=200,
            action_low=[-self.max_torque],
            action_high=[self.max_torque],
            state_low=[-np.pi, -self.max_speed],
            state_high=[np.pi, self.max_speed],
            periodic_dims=(0,),
        )

    def _dynamics(self, states, actions):
        theta, theta_dot = states[:, 0], states[:, 1]
        u = actions[:, 0]
        g, m, l = self.gravity, self.mass, self.length
        new_theta_dot = theta_dot + (3.0 * g / (2.0 * l) * np.sin(theta) + 3.0 / (m * l**2) * u) * self.dt
        new_theta_dot = np.clip(new_theta_dot, -self.max_speed, self.max_speed)
        new_theta = theta + new_theta_dot * self.dt
        return np.stack([new_theta, new_theta_dot], axis=-1)

    def reward_batch(self, states, actions, next_states):
        theta = wrap_periodic(next_states, (0,))[..., 0]
        theta_dot = next_states[..., 1]
        u = actions[..., 0]
        return -(theta**2 + 0.1 * theta_dot**2 + 0.001 * u**2)

    def _sample_start(self, rng):
        return np.array([rng.uniform(-np.pi, np.pi), rng.uniform(-1.0, 1.0)])


class Cartpole(Environment):
    """Cart-pole swing-up; state (x, ẋ, θ, θ̇), θ = 0 upright, starts hanging"""

    gravity = 9.8
    cart_mass = 1.0
    pole_mass = 0.1
    half_length = 0.5
    substep = 0.025
    substeps = 2
    max_force = 10.0
    sigmoid_slope = 10.0
    sigmoid_offset = 0.25

    def __init__(self):
        self.spec = EnvSpec(
            name="cartpole",
            state_dim=4,
            action_dim=1,
            horizon=100,
            action_low=[-self.max_force],
            action_high=[self.max_force],
            state_low=[-3.0, -5.0, -np.pi, -10.0],
            state_high=[3.0, 5.0, np.pi, 10.0],
            periodic_dims=(2,),
        )

    def _dynamics(self, states, actions):
        x, x_dot, theta, theta_dot = (states[:, i].copy() for i in range(4))
        force = actions[:, 0]
        total_mass = self.cart_mass + self.pole_mass
        polemass_length = self.pole_mass * self.half_length
        for _ in range(self.substeps):
            sin, cos = np.sin(theta), np.cos(theta)
            temp = (force + polemass_length * theta_dot**2 * sin) / total_mass
            theta_acc = (self.gravity * sin - cos * temp) / (
                self.half_length * (4.0 / 3.0 - self.pole_mass * cos**2 / total_mass)
            )
            x_acc = temp - polemass_length * theta_acc * cos / total_mass
            # semi-implicit Euler
            x_dot = x_dot + self.substep * x_acc
            x = x + self.substep * x_dot
            theta_dot = theta_dot + self.substep * theta_acc
            theta = theta + self.substep * theta_dot
        return np.stack([x, x_dot, theta, theta_dot], axis=-1)

    def tip_distance(self, states: np.ndarray) -> np.ndarray:
        """Distance from the pole tip to the upright goal (0, 2l)"""
        pole = 2.0 * self.half_length
        tip_x = states[..., 0] + pole * np.sin(states[..., 2])
        tip_y = pole * np.cos(states[..., 2])
        return np.hypot(tip_x, tip_y - pole)

    def reward_batch(self, states, actions, next_states):
        distance = self.tip_distance(next_states)
        return -1.0 / (1.0 + np.exp(-self.sigmoid_slope * (distance - self.sigmoid_offset)))

    def _sample_start(self, rng):
        return np.array([0.0, 0.0, np.pi, 0.0]) + rng.uniform(-0.05, 0.05, size=4)


class LavaPath(Environment):
    """Point mass crossing a lava strip through a narrow bridge"""

    dt = 0.1
    mass = 1.0
    max_velocity = 2.0
    max_force = 5.0
    lava_penalty = 500.0
    lava_half_width = 0.4
    lava_half_height = 1.5
    bridge = (0.3, 0.7)
    start = (-1.2, 0.0, 0.0, 0.0)
    goal = (1.2, 0.0)

    def __init__(self):
        self.spec = EnvSpec(
            name="lava_path",
            state_dim=4,
            action_dim=2,
            horizon=20,
            action_low=[-self.max_force] * 2,
            action_high=[self.max_force] * 2,
            state_low=[-2.0, -2.0, -self.max_velocity, -self.max_velocity],
            state_high=[2.0, 2.0, self.max_velocity, self.max_velocity],
            fixed_start=True,
        )

    def _dynamics(self, states, actions):
        position, velocity = states[:, :2], states[:, 2:]
        velocity = np.clip(velocity + actions * self.dt / self.mass, -self.max_velocity, self.max_velocity)
        return np.concatenate([position + velocity * self.dt, velocity], axis=-1)

    def in_lava(self, states: np.ndarray) -> np.ndarray:
        x, y = states[..., 0], states[..., 1]
        on_bridge = (y >= self.bridge[0]) & (y <= self.bridge[1])
        return (np.abs(x) <= self.lava_half_width) & (np.abs(y) <= self.lava_half_height) & ~on_bridge

    def reward_batch(self, states, actions, next_states):
        distance = np.hypot(next_states[..., 0] - self.goal[0], next_states[..., 1] - self.goal[1])
        return -distance - self.lava_penalty * self.in_lava(next_states)

    def _sample_start(self, rng):
        return np.array(self.start, dtype=float)


class NonlinearGain(Environment):
    """Regulation to the origin through a nonlinear actuator: s' = s + G·g(a)"""

    mixing = np.array([[1.0, 0.3], [-0.2, 0.8]])
    start = (1.5, -1.0)
    action_penalty = 0.01

    def __init__(self, name: str, gain: Callable[[np.ndarray], np.ndarray]):
        self.gain = gain
        self.spec = EnvSpec(
            name=name,
            state_dim=2,
            action_dim=2,
            horizon=10,
            action_low=[-1.0, -1.0],
            action_high=[1.0, 1.0],
            state_low=[-3.0, -3.0],
            state_high=[3.0, 3.0],
            fixed_start=True,
        )

    def _dynamics(self, states, actions):
        return states + self.gain(actions) @ self.mixing.T

    def reward_batch(self, states, actions, next_states):
        return -np.sum(next_states**2, axis=-1) - self.action_penalty * np.sum(actions**2, axis=-1)

    def _sample_start(self, rng):
        return np.array(self.start, dtype=float)


_REGISTRY: Dict[str, Callable[[], Environment]] = {
    "pendulum": Pendulum,
    "cartpole": Cartpole,
    "lava_path": LavaPath,
    "nonlinear_gain_1": lambda: NonlinearGain("nonlinear_gain_1", np.tanh),
    "nonlinear_gain_2": lambda: NonlinearGain("nonlinear_gain_2", lambda a: a * np.abs(a)),
}


def make_env(name: str) -> Environment:
    """Create an environment by name"""
    if name not in _REGISTRY:
        raise ValueError(f"Unknown environment: {name}. Choose from {', '.join(_REGISTRY)}")
    return _REGISTRY[name]()


@dataclass
class GroundTruthModel:
    """Dynamics model that is the true step function

    Exposes the same interface as a GP posterior so the oracle controller and
    the learning agents share one planning path.
    """

    env: Environment
    periodic_dims: Tuple[int, ...] = field(init=False)
    deterministic: bool = field(default=True, init=False)

    def __post_init__(self):
        self.periodic_dims = self.env.spec.periodic_dims

    def __call__(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.env.step_batch(states, actions)

    def sample_functions(self, count: int, seed: int):
        return [self] * count

    def predict_mean(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.env.step_batch(states, actions)
