#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - the planning problem: facts, knowledge, actions and goals.

An action a = (reward, pre-conditions, post-conditions) is executable when every
pre-condition names a fact in the knowledge, and a2 follows a1 when some
pre-condition of a2 is a post-condition of a1. Conditions are matched by fact name,
never by value.
"""

from dataclasses import dataclass, field
from itertools import product
import logging
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Tuple,
)

import networkx as nx

from .const import _dev_mode_
from .exceptions import ConfigValidationError, ContractViolationError
from .helpers import is_valid_fact_name, unique

DEV_MODE = _dev_mode_

_LOGGER = logging.getLogger(__name__)
if DEV_MODE:
    _LOGGER.setLevel(logging.DEBUG)

Library = Dict[str, "Action"]  # action id -> Action, in ascending id order


@dataclass(frozen=True)
class Fact:
    """An information item about the target, e.g. ('dom.name', 'corp.local')."""

    name: str
    value: str
    origin: str = ""

    def __post_init__(self) -> None:
        if not is_valid_fact_name(self.name):
            raise ContractViolationError(f"invalid fact name: {self.name!r}")
        if not isinstance(self.value, str) or not self.value:
            raise ContractViolationError(f"fact {self.name} has an empty value")


class Knowledge:
    """The fact store: fact name -> ordered set of values.

    Instances are never mutated; `union` returns a new store. Values keep the order
    in which they were first stored, which is the order bindings are drawn from.
    """

    __slots__ = ("_entries", "_origins")

    def __init__(self, entries: Optional[Mapping[str, Iterable[str]]] = None) -> None:
        self._entries: Dict[str, Tuple[str, ...]] = {}
        self._origins: Dict[Tuple[str, str], str] = {}

        for name, values in (entries or {}).items():
            for value in values:
                self._add(Fact(name, value))

    def _add(self, fact: Fact) -> None:
        values = self._entries.get(fact.name, ())
        if fact.value in values:
            return
        self._entries[fact.name] = values + (fact.value,)
        self._origins[(fact.name, fact.value)] = fact.origin

    @classmethod
    def from_facts(cls, facts: Iterable[Fact]) -> "Knowledge":
        knowledge = cls()
        for fact in facts:
            knowledge._add(fact)
        return knowledge

    def union(self, facts: Iterable[Fact]) -> "Knowledge":
        """Return K' = K u facts, leaving this store untouched."""
        knowledge = Knowledge()
        knowledge._entries = dict(self._entries)
        knowledge._origins = dict(self._origins)
        for fact in facts:
            knowledge._add(fact)
        return knowledge

    def values(self, name: str) -> Tuple[str, ...]:
        return self._entries.get(name, ())

    def origin(self, name: str, value: str) -> Optional[str]:
        return self._origins.get((name, value))

    def as_dict(self) -> Dict[str, List[str]]:
        return {name: list(values) for name, values in self._entries.items()}

    def issubset(self, other: "Knowledge") -> bool:
        return all(
            value in other.values(name)
            for name, values in self._entries.items()
            for value in values
        )

    def __contains__(self, name) -> bool:
        return bool(self._entries.get(name))

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Knowledge):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self) -> str:
        return f"Knowledge({self.as_dict()!r})"


@dataclass(frozen=True)
class Action:
    """An attack step a = (r_a, pre, post), plus detectability and lock state."""

    id: str
    display_name: str = ""
    reward: Optional[float] = None  # None: the config's default_reward applies
    pre_conditions: FrozenSet[str] = field(default_factory=frozenset)
    post_conditions: FrozenSet[str] = field(default_factory=frozenset)
    detectability: Optional[float] = None  # None: default_detectability_factor
    requires_elevated: bool = False
    locked: bool = False
    unlocked_by: FrozenSet[str] = field(default_factory=frozenset)
    tactic_tag: str = ""

    def __post_init__(self) -> None:
        for attr in ("pre_conditions", "post_conditions", "unlocked_by"):
            object.__setattr__(self, attr, frozenset(getattr(self, attr)))

        bad_names = [
            n
            for n in self.pre_conditions | self.post_conditions
            if not is_valid_fact_name(n)
        ]
        if bad_names:
            raise ConfigValidationError(
                f"invalid fact name(s): {sorted(bad_names)}", key=self.id
            )
        if self.detectability is not None and self.detectability <= 0:
            raise ConfigValidationError(
                f"detectability must be > 0, not {self.detectability}", key=self.id
            )
        if self.locked and not self.unlocked_by:
            raise ConfigValidationError(
                "a locked action must list the action(s) that unlock it", key=self.id
            )

    @property
    def name(self) -> str:
        return self.display_name or self.id

    def __str__(self) -> str:
        return self.id


@dataclass(frozen=True)
class GoalSet:
    """The goal actions G, a non-empty ordered subset of the library."""

    goal_action_ids: Tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "goal_action_ids", tuple(unique(self.goal_action_ids)))
        if not self.goal_action_ids:
            raise ConfigValidationError("there must be at least one goal action")

    def validate(self, library: Mapping[str, Action]) -> None:
        for action_id in self.goal_action_ids:
            if action_id not in library:
                raise ConfigValidationError(
                    f"unknown goal action: {action_id}", key="goal_actions"
                )

    def __contains__(self, action_id) -> bool:
        return action_id in self.goal_action_ids

    def __iter__(self) -> Iterator[str]:
        return iter(self.goal_action_ids)

    def __len__(self) -> int:
        return len(self.goal_action_ids)


def make_library(actions: Iterable[Action]) -> Library:
    """Return a library keyed by action id (ascending), rejecting duplicate ids."""
    library = {}
    for action in actions:
        if action.id in library:
            raise ConfigValidationError(f"duplicate action id: {action.id}", key="id")
        library[action.id] = action
    return {k: library[k] for k in sorted(library)}


def is_executable(action: Action, knowledge: Knowledge) -> bool:
    """Return True if every pre-condition has a value (locks are not considered)."""
    return all(name in knowledge for name in action.pre_conditions)


def follows(a1: Action, a2: Action) -> bool:
    """Return True if a2 has a pre-condition that is a post-condition of a1."""
    return not a2.pre_conditions.isdisjoint(a1.post_conditions)


def follows_graph(library: Mapping[str, Action]) -> nx.DiGraph:
    """Return the action-linking graph, with an edge a1 -> a2 when a2 follows a1."""
    producers: Dict[str, List[str]] = {}
    for action in library.values():
        for name in action.post_conditions:
            producers.setdefault(name, []).append(action.id)

    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(library))
    for action in library.values():
        for name in action.pre_conditions:
            graph.add_edges_from((src, action.id) for src in producers.get(name, ()))
    return graph


def apply_post(
    knowledge: Knowledge, action: Action, produced: Iterable[Fact]
) -> Knowledge:
    """Return K' = K u produced, refusing facts the action does not declare."""
    produced = list(produced)
    for fact in produced:
        if fact.name not in action.post_conditions:
            raise ContractViolationError(
                f"{action.id} produced '{fact.name}', which is not one of its "
                f"post-conditions {sorted(action.post_conditions)}"
            )
    return knowledge.union(produced)


def iter_bindings(action: Action, knowledge: Knowledge) -> Iterator[Dict[str, str]]:
    """Yield the bindings of an executable action, earliest-stored values first.

    A binding maps each pre-condition name to one of its values; names are taken in
    ascending order, and the values of each name in the order they were stored.
    """
    names = sorted(action.pre_conditions)
    for values in product(*(knowledge.values(n) for n in names)):
        yield dict(zip(names, values))
