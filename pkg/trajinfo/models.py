"""Data models for trajinfo

Numeric containers (datasets, trajectories, query sets) are frozen dataclasses
over read-only numpy arrays; run records and reports are pydantic models so
they serialize deterministically.
"""

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from trajinfo.config import ExperimentConfig


def _as_matrix(values, width: Optional[int] = None, name: str = "array") -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim == 1:
        array = array.reshape(-1, width) if width is not None else array.reshape(1, -1)
    if array.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {array.shape}")
    if width is not None and array.shape[1] != width:
        raise ValueError(f"{name} must have {width} columns, got {array.shape[1]}")
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TransitionDataset:
    """Append-only experience D of (state, action, next_state) triples"""

    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray

    def __post_init__(self):
        states = _as_matrix(self.states, name="states")
        actions = _as_matrix(self.actions, name="actions")
        next_states = _as_matrix(self.next_states, width=states.shape[1], name="next_states")
        if not (len(states) == len(actions) == len(next_states)):
            raise ValueError(
                f"Triple arrays disagree in length: {len(states)}, {len(actions)}, {len(next_states)}"
            )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "next_states", next_states)

    @classmethod
    def empty(cls, state_dim: int, action_dim: int) -> "TransitionDataset":
        return cls(np.zeros((0, state_dim)), np.zeros((0, action_dim)), np.zeros((0, state_dim)))

    @classmethod
    def from_triples(cls, triples: Sequence[Tuple[Sequence[float], Sequence[float], Sequence[float]]]) -> "TransitionDataset":
        if not triples:
            raise ValueError("from_triples needs at least one triple; use TransitionDataset.empty")
        states, actions, next_states = zip(*triples)
        return cls(np.array(states, dtype=float), np.array(actions, dtype=float), np.array(next_states, dtype=float))

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    @property
    def action_dim(self) -> int:
        return self.actions.shape[1]

    def append(self, state, action, next_state) -> "TransitionDataset":
        """Return a new dataset with one more triple"""
        return self.extend(
            np.reshape(state, (1, -1)), np.reshape(action, (1, -1)), np.reshape(next_state, (1, -1))
        )

    def extend(self, states, actions, next_states) -> "TransitionDataset":
        """Return a new dataset with the given triples appended"""
        states = np.reshape(np.asarray(states, dtype=float), (-1, self.state_dim))
        actions = np.reshape(np.asarray(actions, dtype=float), (-1, self.action_dim))
        next_states = np.reshape(np.asarray(next_states, dtype=float), (-1, self.state_dim))
        return TransitionDataset(
            np.vstack([self.states, states]),
            np.vstack([self.actions, actions]),
            np.vstack([self.next_states, next_states]),
        )

    @cached_property
    def snapshot_id(self) -> str:
        """Identity of this dataset's contents; changes iff a triple is appended"""
        digest = hashlib.sha1()
        for array in (self.states, self.actions, self.next_states):
            digest.update(np.ascontiguousarray(array).tobytes())
        return f"{len(self)}:{digest.hexdigest()[:16]}"


@dataclass(frozen=True)
class Trajectory:
    """States s_0..s_k (terminal included), actions a_0..a_{k-1} and rewards"""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        states = _as_matrix(self.states, name="states")
        action_width = np.asarray(self.actions).shape[-1] if np.asarray(self.actions).ndim == 2 else None
        actions = _as_matrix(self.actions, width=action_width, name="actions")
        rewards = np.array(self.rewards, dtype=float).reshape(-1)
        rewards.setflags(write=False)
        if len(states) != len(actions) + 1:
            raise ValueError(f"{len(actions)} actions need {len(actions) + 1} states, got {len(states)}")
        if len(rewards) != len(actions):
            raise ValueError(f"{len(actions)} actions need {len(actions)} rewards, got {len(rewards)}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "rewards", rewards)

    @classmethod
    def empty(cls, state, action_dim: int) -> "Trajectory":
        return cls(np.reshape(state, (1, -1)), np.zeros((0, action_dim)), np.zeros(0))

    def __len__(self) -> int:
        return self.actions.shape[0]

    @property
    def pairs(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return [(self.states[i], self.actions[i]) for i in range(len(self))]

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def total_return(self) -> float:
        return float(np.sum(self.rewards))

    def transitions(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(states, actions, next_states) arrays of the k transitions"""
        return self.states[:-1], self.actions, self.states[1:]


@dataclass(frozen=True)
class QuerySet:
    """Finite, nonempty set X of (state, action) pairs"""

    states: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        states = _as_matrix(self.states, name="states")
        actions = _as_matrix(self.actions, name="actions")
        if len(states) == 0:
            raise ValueError("QuerySet must be nonempty")
        if len(states) != len(actions):
            raise ValueError(f"QuerySet has {len(states)} states but {len(actions)} actions")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[Sequence[float], Sequence[float]]]) -> "QuerySet":
        states, actions = zip(*pairs)
        return cls(np.array(states, dtype=float), np.array(actions, dtype=float))

    def __len__(self) -> int:
        return self.states.shape[0]

    def subset(self, index: int) -> "QuerySet":
        return QuerySet(self.states[index : index + 1], self.actions[index : index + 1])


class StepRecord(BaseModel):
    """One true-environment transition taken during training"""

    episode: int = Field(description="Episode, trial or acquisition round index")
    t: int = Field(description="Timestep within the episode")
    dataset_size: int = Field(description="Dataset size after appending this transition")
    state: List[float] = Field(description="State the action was taken from")
    action: List[float] = Field(description="Executed action")
    next_state: List[float] = Field(description="Realized next state")
    planning_cost: Optional[float] = Field(default=None, description="Best planner cost (or negated acquisition value)")
    wall_clock: float = Field(default=0.0, exclude=True, description="Seconds spent on this step (kept out of transcripts)")


class EvalRecord(BaseModel):
    """Greedy evaluation at one point of the learning curve"""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    transitions: int = Field(description="Training transitions collected so far")
    mean_return: float = Field(description="Mean return over the evaluation episodes")
    returns: List[float] = Field(default_factory=list, description="Per-episode returns")
    planner_mse: float = Field(description="Model MSE on the points the evaluation planner visited")
    uniform_mse: float = Field(description="Model MSE on the seeded uniform test set")


class RunTranscript(BaseModel):
    """Everything one (algorithm, environment, seed) run produced"""

    env: str
    algorithm: str
    seed: int
    mode: str = Field(description="closed_loop, open_loop or tqrl")
    steps: List[StepRecord] = Field(default_factory=list)
    evals: List[EvalRecord] = Field(default_factory=list)
    trajectory_sample_refreshes: int = Field(default=0, description="Times optimal-trajectory samples were redrawn")
    planner_calls: int = Field(default=0, description="iCEM invocations during training")
    aborted: bool = False
    abort_reason: Optional[str] = None

    @property
    def total_transitions(self) -> int:
        return len(self.steps)


class SeedOutcome(BaseModel):
    """Sample complexity of one seed"""

    seed: int
    transitions_to_solve: Optional[int] = Field(default=None, description="None when the seed never solved")
    failed: bool = Field(default=False, description="The run crashed")
    error: Optional[str] = None


class SampleComplexityReport(BaseModel):
    """Median transitions-to-solve across seeds"""

    env: str
    algorithm: str
    threshold: float
    solve_slack: float
    budget_transitions: int
    eval_cadence: str
    seeds: List[SeedOutcome] = Field(default_factory=list)
    median: float
    median_display: str


class ExperimentRecord(BaseModel):
    """What `report` needs to re-aggregate an output directory"""

    config: ExperimentConfig = Field(description="Configuration as run")
    threshold: float = Field(description="Ground-truth MPC solve threshold")
    threshold_episodes: int = Field(ge=1)
