#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - the assessment loop.

Each iteration computes the candidates (executable, unlocked actions with a binding
not yet tried), selects one (the best adapted future reward, or a draw weighted by
it), makes sure it runs on a coherent agent, executes it, and updates the knowledge,
the locks and the rewards. A run ends when a goal action succeeds, when nothing is
left to try, or at the step cap.
"""

from dataclasses import dataclass, field, replace
import logging
import random
from statistics import mean
import time
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    MutableSet,
    Optional,
    Sequence,
    Tuple,
)

from .access import (
    InitialAccessAgenda,
    check_precompromise,
    ensure_privilege,
    run_precompromise,
)
from .const import (
    ABORTED,
    AGENT_SEED,
    DEFAULT_DEPTH,
    DEFAULT_DETECTABILITY_FACTOR,
    DEFAULT_DETECTABILITY_WEIGHT,
    DEFAULT_DISCOUNT,
    DEFAULT_GOAL_REWARD,
    DEFAULT_REWARD,
    DEFAULT_REWARD_UPDATE,
    DEFAULT_STEP_LIMIT,
    EXHAUSTED,
    FAILURE,
    GOAL_ACHIEVED,
    ORIGIN_ENVIRONMENT,
    ORIGIN_LATERAL,
    POSTCOMPROMISE,
    PRECOMPROMISE,
    RESERVED_TACTICS,
    STEP_LIMIT,
    SUCCESS,
    WEIGHT_FLOOR,
    _dev_mode_,
)
from .environment import ActionEffect, Agent, Environment, execute
from .exceptions import ConfigValidationError, ContractViolationError, NoCandidateError
from .helpers import binding_key
from .model import (
    Action,
    Fact,
    GoalSet,
    Knowledge,
    Library,
    apply_post,
    is_executable,
    iter_bindings,
)
from .rewards import (
    RewardEngine,
    RewardParams,
    RewardUpdateRule,
    apply_reward_updates,
    unlock_transitions,
)
from .trace import ExecutionTrace, StepRecord

DEV_MODE = _dev_mode_

_LOGGER = logging.getLogger(__name__)
if DEV_MODE:
    _LOGGER.setLevel(logging.DEBUG)

Exhausted = MutableSet[Tuple[str, tuple]]  # (action id, binding key)


@dataclass(frozen=True)
class PlannerConfig:
    """The planner parameters, one per assessment scenario."""

    name: str
    goal_actions: GoalSet
    description: str = ""
    seed: Optional[int] = None
    weighted_random: bool = False
    depth: int = DEFAULT_DEPTH
    discount: float = DEFAULT_DISCOUNT
    default_goal_reward: float = DEFAULT_GOAL_REWARD
    default_reward: float = DEFAULT_REWARD
    default_reward_update: float = DEFAULT_REWARD_UPDATE
    detectability_weight: float = DEFAULT_DETECTABILITY_WEIGHT
    default_detectability_factor: float = DEFAULT_DETECTABILITY_FACTOR
    action_rewards: Mapping[str, float] = field(default_factory=dict)
    locked_actions: FrozenSet[str] = field(default_factory=frozenset)
    reward_updates: Tuple[RewardUpdateRule, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.goal_actions, GoalSet):
            object.__setattr__(self, "goal_actions", GoalSet(self.goal_actions))
        object.__setattr__(self, "action_rewards", dict(self.action_rewards))
        object.__setattr__(self, "locked_actions", frozenset(self.locked_actions))
        object.__setattr__(self, "reward_updates", tuple(self.reward_updates))
        if self.seed is not None and self.seed < 0:
            raise ConfigValidationError(f"must be >= 0, not {self.seed}", key="seed")
        _ = self.reward_params  # validates the reward parameters

    @property
    def reward_params(self) -> RewardParams:
        return RewardParams(
            discount=self.discount,
            depth_limit=self.depth,
            detectability_weight=self.detectability_weight,
            default_detectability_factor=self.default_detectability_factor,
        )


@dataclass(frozen=True)
class RunStatistics:
    runs: int
    unique_sequences: int
    mean_length: float
    min_length: int
    max_length: int
    goal_rate: float
    outcomes: Mapping[str, int] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        return {
            "runs": self.runs,
            "unique_sequences": self.unique_sequences,
            "mean_length": self.mean_length,
            "min_length": self.min_length,
            "max_length": self.max_length,
            "goal_rate": self.goal_rate,
            "outcomes": dict(self.outcomes),
        }


def _unlockers(config: PlannerConfig, action_id: str) -> FrozenSet[str]:
    """Return the triggers of the reward updates aimed at a config-locked action."""
    return frozenset(
        r.trigger_action_id for r in config.reward_updates if action_id in r.deltas
    )


def validate_config(config: PlannerConfig, library: Mapping[str, Action]) -> None:
    """Raise ConfigValidationError if the config refers to unknown actions."""
    config.goal_actions.validate(library)

    def check(ids: Iterable[str], key: str) -> None:
        for action_id in ids:
            if action_id not in library:
                raise ConfigValidationError(f"unknown action: {action_id}", key=key)

    check(config.action_rewards, "action_rewards")
    check(config.locked_actions, "locked_actions")
    for rule in config.reward_updates:
        check(rule.action_ids(), "reward_updates")

    for action_id in sorted(config.locked_actions):
        if not (library[action_id].unlocked_by or _unlockers(config, action_id)):
            raise ConfigValidationError(
                f"{action_id} is locked, but no action unlocks it",
                key="locked_actions",
            )

    for action in library.values():
        check(action.unlocked_by, f"{action.id}.unlocked_by")


def assign_rewards(config: PlannerConfig, library: Mapping[str, Action]) -> Library:
    """Return the library with the run's starting rewards and locks.

    A reward comes from `action_rewards`, else the goal reward (for goals), else the
    library, else `default_reward`. A config-locked action is unlocked by the
    triggers of the reward updates that target it.
    """
    result = {}
    for action_id, action in library.items():
        if action_id in config.action_rewards:
            reward = config.action_rewards[action_id]
        elif action_id in config.goal_actions:
            reward = config.default_goal_reward
        elif action.reward is not None:
            reward = action.reward
        else:
            reward = config.default_reward

        action = replace(action, reward=reward)
        if action_id in config.locked_actions:
            action = replace(
                action,
                locked=True,
                unlocked_by=action.unlocked_by | _unlockers(config, action_id),
            )
        result[action_id] = action
    return result


def next_binding(
    action: Action, knowledge: Knowledge, exhausted: Exhausted
) -> Optional[Dict[str, str]]:
    """Return the first binding of the action that has not been tried yet."""
    return next(
        (
            b
            for b in iter_bindings(action, knowledge)
            if (action.id, binding_key(b)) not in exhausted
        ),
        None,
    )


def candidate_set(
    library: Mapping[str, Action], knowledge: Knowledge, exhausted: Exhausted
) -> List[Action]:
    """Return the selectable actions, in ascending id order.

    Reconnaissance, initial access and privilege escalation techniques belong to the
    dedicated components, and are never candidates.
    """
    return [
        library[k]
        for k in sorted(library)
        if not library[k].locked
        and library[k].tactic_tag not in RESERVED_TACTICS
        and is_executable(library[k], knowledge)
        and next_binding(library[k], knowledge, exhausted) is not None
    ]


def select_next_deterministic(
    candidates: Sequence[Action], engine: RewardEngine
) -> Action:
    """Return the best candidate by adapted future reward (ties: smallest id)."""
    if not candidates:
        raise NoCandidateError("there are no candidates")
    return engine.rank(candidates)[0][0]


def select_next_weighted(
    candidates: Sequence[Action], engine: RewardEngine, rng: random.Random
) -> Action:
    """Return a candidate drawn with probability proportional to its adapted reward.

    Rewards below the floor (zero, negative) are given the floor as their weight.
    Exactly one value is drawn from the generator.
    """
    if not candidates:
        raise NoCandidateError("there are no candidates")
    weights = [max(engine.adapted(a), WEIGHT_FLOOR) for a in candidates]
    return rng.choices(candidates, weights=weights)[0]


def mark_failed(
    exhausted: Exhausted, action: Action, binding: Mapping[str, str]
) -> Exhausted:
    exhausted.add((action.id, binding_key(binding)))
    return exhausted


def _make_rng(
    config: PlannerConfig, seed: Optional[int]
) -> Tuple[Optional[int], Optional[random.Random]]:
    seed = config.seed if seed is None else seed
    if not config.weighted_random:
        return seed, None
    if seed is None:
        seed = random.SystemRandom().randrange(2 ** 32)
        _LOGGER.info("No seed was configured, using %s", seed)
    return seed, random.Random(seed)


class _Run:
    """The mutable state of one assessment."""

    def __init__(
        self,
        config: PlannerConfig,
        library: Mapping[str, Action],
        env: Environment,
        effects: Mapping[str, ActionEffect],
        agendas: Sequence[InitialAccessAgenda],
        rng: Optional[random.Random],
        step_limit: int,
        trace: ExecutionTrace,
    ) -> None:
        self.config = config
        self.env = env
        self.effects = effects
        self.agendas = agendas
        self.rng = rng
        self.step_limit = step_limit
        self.trace = trace

        self.engine = RewardEngine(
            assign_rewards(config, library), config.reward_params
        )
        self.knowledge = Knowledge.from_facts(
            Fact(name, value, ORIGIN_ENVIRONMENT)
            for name, values in env.known_facts.items()
            for value in values
        )
        self.exhausted: Exhausted = set()
        self.agent: Optional[Agent] = None
        self.main_steps = 0
        self.planning_seconds = 0.0

    @property
    def library(self) -> Library:
        return self.engine.library

    def _append(self, step: StepRecord) -> None:
        self.trace.steps.append(step)
        if step.phase != PRECOMPROMISE:
            self.main_steps += 1

    def _succeeded(self, action: Action, facts: Iterable[Fact]) -> None:
        self.knowledge = apply_post(self.knowledge, action, facts)
        library = unlock_transitions(action, self.library)
        library = apply_reward_updates(
            self.config.reward_updates,
            action,
            library,
            self.config.default_reward_update,
            graph=self.engine.graph,
        )
        self.engine = self.engine.with_library(library)

    def _select(self, candidates: Sequence[Action]) -> Action:
        if _LOGGER.isEnabledFor(logging.DEBUG):
            _LOGGER.debug(
                "Candidates: %s",
                {a.id: round(r, 4) for a, r in self.engine.rank(candidates)},
            )
        if self.rng is None:
            return select_next_deterministic(candidates, self.engine)
        return select_next_weighted(candidates, self.engine, self.rng)

    def _agent_for(self, action: Action) -> Agent:
        """Return the seed agent for seed actions, else the current agent.

        The current agent moves along with every successful lateral movement.
        """
        effect = self.effects.get(action.id)
        if effect is not None and effect.required_agent == AGENT_SEED:
            return self.env.seed_agent
        return self.agent

    def start(self) -> bool:
        """Run the pre-compromise phase; return False if no target was compromised."""
        self.agent, steps, self.knowledge = run_precompromise(
            self.config,
            self.agendas,
            self.env,
            self.library,
            self.effects,
            self.knowledge,
        )
        for step in steps:
            self._append(step)
        return self.agent is not None

    def step(self) -> Optional[str]:
        """Execute one action; return the outcome if the run is over."""
        if self.main_steps >= self.step_limit:
            return STEP_LIMIT

        started = time.perf_counter()
        candidates = candidate_set(self.library, self.knowledge, self.exhausted)
        if not candidates:
            return EXHAUSTED
        action = self._select(candidates)
        self.planning_seconds += time.perf_counter() - started

        reward = self.engine.adapted(action)
        binding = next_binding(action, self.knowledge, self.exhausted)
        _LOGGER.debug(
            "Selected %s (%.4f), binding = %s, from %s",
            action.id,
            reward,
            binding,
            {k: self.knowledge.origin(k, v) for k, v in binding.items()},
        )

        agent = self._agent_for(action)
        if action.requires_elevated:
            agent, steps = ensure_privilege(
                action,
                agent,
                self.library,
                self.env,
                self.knowledge,
                self.engine,
                self.effects,
                self.exhausted,
                len(self.trace.steps) + 1,
            )
            for step in steps:
                self._append(step)
                if step.succeeded:
                    self._succeeded(self.library[step.action_id], step.facts_produced)

            if agent is None:
                mark_failed(self.exhausted, action, binding)
                return None
            if self.main_steps >= self.step_limit:
                return STEP_LIMIT

        index = len(self.trace.steps) + 1
        outcome = execute(
            action,
            binding,
            agent,
            self.env,
            self.effects.get(action.id),
            f"{index}:{action.id}",
        )
        self._append(
            StepRecord(
                index,
                action.id,
                agent.id,
                binding,
                reward,
                SUCCESS if outcome.success else FAILURE,
                outcome.facts,
                POSTCOMPROMISE,
            )
        )
        mark_failed(self.exhausted, action, binding)  # tried, whatever the result

        if not outcome.success:
            return None

        self._succeeded(action, outcome.facts)
        if outcome.agent is not None and outcome.agent.origin == ORIGIN_LATERAL:
            _LOGGER.info(
                "Moved to %s, continuing on %s",
                outcome.agent.host_address,
                outcome.agent.id,
            )
            self.agent = outcome.agent
        if action.id in self.config.goal_actions:
            return GOAL_ACHIEVED
        return None


def run_assessment(
    config: PlannerConfig,
    library: Mapping[str, Action],
    env: Environment,
    effects: Optional[Mapping[str, ActionEffect]] = None,
    agendas: Sequence[InitialAccessAgenda] = (),
    seed: Optional[int] = None,
    step_limit: int = DEFAULT_STEP_LIMIT,
    timing: bool = False,
) -> ExecutionTrace:
    """Run one assessment against a copy of the environment, and return its trace.

    The seed, if any, overrides the config's. An invalid config raises
    ConfigValidationError before any step; a contract violation during the run ends
    it with outcome 'aborted'.
    """
    validate_config(config, library)
    if step_limit < 1:
        raise ConfigValidationError(f"must be >= 1, not {step_limit}", key="step_limit")
    check_precompromise(env, library, effects or {})

    seed_used, rng = _make_rng(config, seed)
    trace = ExecutionTrace(seed_used=seed_used, config_name=config.name)
    run: Optional[_Run] = None
    try:
        run = _Run(
            config,
            library,
            env.copy(),
            effects or {},
            agendas,
            rng,
            step_limit,
            trace,
        )
        if not run.start():
            trace.outcome = EXHAUSTED
            trace.diagnostic = "no initial access agenda compromised a host"
        while trace.outcome is None:
            trace.outcome = run.step()

    except ContractViolationError as exc:
        _LOGGER.error("Run aborted: %s", exc)
        trace.outcome = ABORTED
        trace.diagnostic = str(exc)

    if timing and run is not None:
        trace.planning_seconds = run.planning_seconds

    _LOGGER.info(
        "Run %s: %s after %s steps, sequence = %s",
        config.name,
        trace.outcome,
        len(trace.steps),
        list(trace.sequence),
    )
    return trace


def summarize_runs(traces: Sequence[ExecutionTrace]) -> RunStatistics:
    """Return the batch statistics; sequences compare post-compromise action ids."""
    if not traces:
        raise ValueError("there are no traces to summarize")

    lengths = [len(t.sequence) for t in traces]
    outcomes: Dict[str, int] = {}
    for trace in traces:
        outcomes[trace.outcome] = outcomes.get(trace.outcome, 0) + 1

    return RunStatistics(
        runs=len(traces),
        unique_sequences=len({t.sequence for t in traces}),
        mean_length=mean(lengths),
        min_length=min(lengths),
        max_length=max(lengths),
        goal_rate=sum(t.goal_achieved for t in traces) / len(traces),
        outcomes=outcomes,
    )
