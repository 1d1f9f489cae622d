#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - reward mathematics.

The future reward of an action is its own reward plus the best discounted future
reward of the actions that follow it:

    f(a, d) = r_a * g**d + max(f(b, d + 1) for b following a)

bounded by the configured depth, and skipping actions already on the recursion path
(the follows-graph of a real library may contain cycles). The adapted future reward
weighs f(a, 0) by the action's detectability: f*(a) = f(a, 0) * d(a)**w.
"""

from dataclasses import dataclass, field, replace
import logging
import math
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from .const import (
    ALERT_WEIGHTS,
    DEFAULT_DEPTH,
    DEFAULT_DETECTABILITY_FACTOR,
    DEFAULT_DETECTABILITY_WEIGHT,
    DEFAULT_DISCOUNT,
    DEFAULT_REWARD,
    DETECTABILITY_CEILING,
    DETECTABILITY_MAX,
    DETECTABILITY_SCALE,
    DETECTABILITY_SPAN,
    LOG_VOLUME_DIVISOR,
    _dev_mode_,
)
from .exceptions import ConfigValidationError
from .model import Action, Library, follows_graph

DEV_MODE = _dev_mode_

_LOGGER = logging.getLogger(__name__)
if DEV_MODE:
    _LOGGER.setLevel(logging.DEBUG)


@dataclass(frozen=True)
class RewardParams:
    """The discount g, the depth limit, the detectability weight w and d(a) default."""

    discount: float = DEFAULT_DISCOUNT
    depth_limit: int = DEFAULT_DEPTH
    detectability_weight: float = DEFAULT_DETECTABILITY_WEIGHT
    default_detectability_factor: float = DEFAULT_DETECTABILITY_FACTOR

    def __post_init__(self) -> None:
        if not 0 < self.discount <= 1:
            raise ConfigValidationError(
                f"must be in (0, 1], not {self.discount}", key="discount"
            )
        if self.depth_limit < 1:
            raise ConfigValidationError(
                f"must be >= 1, not {self.depth_limit}", key="depth"
            )
        if self.default_detectability_factor <= 0:
            raise ConfigValidationError(
                f"must be > 0, not {self.default_detectability_factor}",
                key="default_detectability_factor",
            )


@dataclass(frozen=True)
class RewardUpdateRule:
    """After the trigger succeeds, add each delta to its action's reward."""

    trigger_action_id: str
    deltas: Mapping[str, float] = field(default_factory=dict)

    def action_ids(self) -> FrozenSet[str]:
        return frozenset((self.trigger_action_id, *self.deltas))


def base_reward(action: Action) -> float:
    return DEFAULT_REWARD if action.reward is None else action.reward


def detectability(action: Action, params: RewardParams) -> float:
    if action.detectability is None:
        return params.default_detectability_factor
    return action.detectability


def _future_reward(
    action_id: str,
    depth: int,
    library: Mapping[str, Action],
    params: RewardParams,
    graph: nx.DiGraph,
    path: FrozenSet[str],
) -> float:
    value = base_reward(library[action_id]) * params.discount ** depth

    if depth + 1 >= params.depth_limit:
        return value

    path = path | {action_id}
    followers = [b for b in graph.successors(action_id) if b not in path]
    if followers:
        value += max(
            _future_reward(b, depth + 1, library, params, graph, path)
            for b in followers
        )
    return value


def future_reward(
    action: Action,
    library: Mapping[str, Action],
    params: RewardParams,
    depth: int = 0,
    graph: Optional[nx.DiGraph] = None,
) -> float:
    """Return f(a, depth); planners rank candidates by f(a, 0)."""
    if depth < 0:
        raise ValueError(f"depth must be >= 0, not {depth}")
    if graph is None:
        graph = follows_graph(library)
    return _future_reward(action.id, depth, library, params, graph, frozenset())


def adapted_future_reward(
    action: Action,
    library: Mapping[str, Action],
    params: RewardParams,
    graph: Optional[nx.DiGraph] = None,
) -> float:
    """Return f*(a) = f(a, 0) * d(a) ** w."""
    reward = future_reward(action, library, params, graph=graph)
    if params.detectability_weight == 0:
        return reward
    return reward * detectability(action, params) ** params.detectability_weight


def detectability_score(
    high_alerts: int, medium_alerts: int, low_alerts: int, log_volume: int
) -> float:
    """Return the raw score: alerts weighted by level, plus log volume / 100."""
    counts = {"high": high_alerts, "medium": medium_alerts, "low": low_alerts}
    if any(v < 0 for v in (*counts.values(), log_volume)):
        raise ValueError("telemetry counts must be non-negative")

    return (
        sum(ALERT_WEIGHTS[k] * v for k, v in counts.items())
        + log_volume / LOG_VOLUME_DIVISOR
    )


def detectability_from_telemetry(
    high_alerts: int, medium_alerts: int, low_alerts: int, log_volume: int
) -> float:
    """Return a detectability factor in [0.5, 2): 2 - 1.5 * e**(-score / 10)."""
    score = detectability_score(high_alerts, medium_alerts, low_alerts, log_volume)
    factor = DETECTABILITY_MAX - DETECTABILITY_SPAN * math.exp(
        -score / DETECTABILITY_SCALE
    )
    return min(factor, DETECTABILITY_CEILING)  # the range is [0.5, 2)


def apply_reward_updates(
    rules: Iterable[RewardUpdateRule],
    executed: Action,
    library: Mapping[str, Action],
    default_follower_bump: float,
    graph: Optional[nx.DiGraph] = None,
) -> Library:
    """Return the library with the rewards updated after a successful execution.

    Every action following the executed one gets the follower bump, then any explicit
    rules triggered by the executed action add their deltas.
    """
    if graph is None:
        graph = follows_graph(library)

    rewards: Dict[str, float] = {}
    if default_follower_bump:
        for action_id in graph.successors(executed.id):
            rewards[action_id] = base_reward(library[action_id]) + default_follower_bump

    for rule in rules:
        if rule.trigger_action_id != executed.id:
            continue
        for action_id, delta in rule.deltas.items():
            rewards[action_id] = (
                rewards.get(action_id, base_reward(library[action_id])) + delta
            )

    if rewards:
        _LOGGER.debug("Reward updates after %s: %s", executed.id, rewards)

    return {
        k: replace(v, reward=rewards[k]) if k in rewards else v
        for k, v in library.items()
    }


def unlock_transitions(executed: Action, library: Mapping[str, Action]) -> Library:
    """Return the library with every action unlocked by the executed one unlocked."""
    unlocked = [
        a.id for a in library.values() if a.locked and executed.id in a.unlocked_by
    ]
    if unlocked:
        _LOGGER.debug("Actions unlocked by %s: %s", executed.id, unlocked)

    return {
        k: replace(v, locked=False) if k in unlocked else v for k, v in library.items()
    }


class RewardEngine:
    """The reward context of a run: the current library, its params and links.

    The follows-graph depends on conditions only, so it is built once and shared by
    every library derived through `with_library`.
    """

    def __init__(
        self,
        library: Mapping[str, Action],
        params: RewardParams,
        graph: Optional[nx.DiGraph] = None,
    ) -> None:
        self.library = dict(library)
        self.params = params
        self.graph = follows_graph(library) if graph is None else graph

    def __repr__(self) -> str:
        return f"RewardEngine(actions={len(self.library)}, params={self.params})"

    def with_library(self, library: Mapping[str, Action]) -> "RewardEngine":
        return RewardEngine(library, self.params, graph=self.graph)

    def future_reward(self, action: Action, depth: int = 0) -> float:
        return future_reward(
            self.library[action.id], self.library, self.params, depth, self.graph
        )

    def adapted(self, action: Action) -> float:
        return adapted_future_reward(
            self.library[action.id], self.library, self.params, self.graph
        )

    def rank(self, actions: Iterable[Action]) -> List[Tuple[Action, float]]:
        """Return (action, adapted reward), best first, ties by ascending id."""
        scored = [(a, self.adapted(a)) for a in actions]
        return sorted(scored, key=lambda x: (-x[1], x[0].id))

    def table(self) -> Dict[str, Dict[str, float]]:
        """Return the base, future and adapted reward of every action."""
        return {
            k: {
                "reward": base_reward(a),
                "future": self.future_reward(a),
                "adapted": self.adapted(a),
            }
            for k, a in self.library.items()
        }
