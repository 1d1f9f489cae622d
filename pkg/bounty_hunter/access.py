#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - the (pre-)compromise and privilege escalation components.

Pre-compromise runs from the attacker's seed agent, detached from the rewards: scan
the configured range, port-scan every host found, then try the initial access
agendas whose requirements a host meets, in configuration order, until one of them
starts an agent on the target.

Privilege escalation keeps execution coherent: an action that requires elevated
privileges runs on an elevated agent on the same host, started on demand.
"""

from dataclasses import dataclass
import ipaddress
import logging
import re
from typing import (
    Dict,
    Iterable,
    List,
    Mapping,
    MutableSet,
    Optional,
    Sequence,
    Tuple,
)

from .const import (
    BUILTIN_HOST_SCAN,
    BUILTIN_PORT_SCAN,
    FACT_HOST_IP,
    FACT_SERVICE_PORT,
    FACT_SERVICE_PROTOCOL,
    FACT_SERVICE_VERSION,
    FAILURE,
    ESCALATION,
    ORIGIN_INITIAL_ACCESS,
    PRECOMPROMISE,
    PRIV_USER,
    SUCCESS,
    TACTIC_PRIVILEGE_ESCALATION,
    _dev_mode_,
)
from .environment import ActionEffect, Agent, Environment, execute, spawn_agent
from .exceptions import CoherenceError, ConfigValidationError
from .helpers import binding_key
from .model import Action, Fact, Knowledge, apply_post, is_executable, iter_bindings
from .rewards import RewardEngine
from .trace import StepRecord

DEV_MODE = _dev_mode_

_LOGGER = logging.getLogger(__name__)
if DEV_MODE:
    _LOGGER.setLevel(logging.DEBUG)


@dataclass(frozen=True)
class Requirement:
    """A fact an agenda needs, optionally with a value predicate."""

    fact: str
    equals: Optional[str] = None
    pattern: Optional[str] = None

    def matches(self, knowledge: Knowledge) -> bool:
        values = knowledge.values(self.fact)
        if self.equals is not None:
            return self.equals in values
        if self.pattern is not None:
            return any(re.fullmatch(self.pattern, v) for v in values)
        return bool(values)


@dataclass(frozen=True)
class InitialAccessAgenda:
    """A short action sequence that compromises a host meeting its requirements."""

    id: str
    requirements: Tuple[Requirement, ...] = ()
    steps: Tuple[str, ...] = ()
    yields_agent_on: str = FACT_HOST_IP

    def __post_init__(self) -> None:
        object.__setattr__(self, "requirements", tuple(self.requirements))
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ConfigValidationError(
                "an agenda needs at least one step", key=self.id
            )


def _check_seed(agent: Agent) -> None:
    if not agent.is_seed:
        raise CoherenceError(
            f"scans must run on the attacker's seed agent, not {agent.id}"
        )


def scan_hosts(agent: Agent, range: str, env: Environment) -> List[Fact]:
    """Return a host.ip fact for every host in range, except the attacker's."""
    _check_seed(agent)
    try:
        network = ipaddress.ip_network(range, strict=False)
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="scan_range")

    addresses = sorted(
        (ipaddress.ip_address(a) for a in env.hosts if a != env.attacker_address),
        key=lambda a: (a.version, a),
    )
    return [Fact(FACT_HOST_IP, str(a)) for a in addresses if a in network]


def scan_ports(agent: Agent, host_ip: str, env: Environment) -> List[Fact]:
    """Return the service facts of a host; an unknown host has no open ports."""
    _check_seed(agent)
    host = env.hosts.get(host_ip)
    if host is None:
        return []

    facts = []
    for svc in sorted(host.services, key=lambda s: (s.port, s.protocol)):
        facts.append(Fact(FACT_SERVICE_PORT, str(svc.port)))
        facts.append(Fact(FACT_SERVICE_PROTOCOL, svc.protocol))
        if svc.version:
            facts.append(Fact(FACT_SERVICE_VERSION, svc.version))
    return facts


def applicable_agendas(
    agendas: Iterable[InitialAccessAgenda], knowledge: Knowledge
) -> List[InitialAccessAgenda]:
    """Return the agendas whose every requirement is met, in configuration order."""
    return [a for a in agendas if all(r.matches(knowledge) for r in a.requirements)]


def builtin_action(
    library: Mapping[str, Action], effects: Mapping[str, ActionEffect], builtin: str
) -> Action:
    for action_id, effect in effects.items():
        if effect.builtin == builtin and action_id in library:
            return library[action_id]
    raise ConfigValidationError(f"the library has no {builtin} action", key="builtin")


def check_precompromise(
    env: Environment,
    library: Mapping[str, Action],
    effects: Mapping[str, ActionEffect],
) -> None:
    """Raise ConfigValidationError unless a run can reach its first agent."""
    if env.foothold is not None:
        return
    if not env.scan_range:
        raise ConfigValidationError(
            "an environment without a foothold needs a scan_range", key="scan_range"
        )
    for builtin in (BUILTIN_HOST_SCAN, BUILTIN_PORT_SCAN):
        builtin_action(library, effects, builtin)


def _stamp(facts: Iterable[Fact], origin: str) -> List[Fact]:
    return [Fact(f.name, f.value, origin) for f in facts]


def run_precompromise(
    config,
    agendas: Sequence[InitialAccessAgenda],
    env: Environment,
    library: Mapping[str, Action],
    effects: Mapping[str, ActionEffect],
    knowledge: Optional[Knowledge] = None,
) -> Tuple[Optional[Agent], List[StepRecord], Knowledge]:
    """Start an agent on a target, and return it with the steps that did so.

    With a foothold (assumed breach) the agent is simply started there. Otherwise the
    returned agent is None if no agenda could compromise any discovered host.
    """
    knowledge = Knowledge() if knowledge is None else knowledge
    steps: List[StepRecord] = []

    if env.foothold is not None:
        agent = spawn_agent(
            env, env.host(env.foothold), PRIV_USER, ORIGIN_INITIAL_ACCESS
        )
        _LOGGER.info("Assumed breach of %s, using %s", env.foothold, agent.id)
        return agent, steps, knowledge

    check_precompromise(env, library, effects)

    seed = env.seed_agent
    name = getattr(config, "name", "")
    _LOGGER.info(
        "Pre-compromise (%s): scanning %s from %s", name, env.scan_range, seed.id
    )

    def record(action: Action, binding, facts: List[Fact], success: bool) -> None:
        steps.append(
            StepRecord(
                len(steps) + 1,
                action.id,
                seed.id,
                binding,
                None,
                SUCCESS if success else FAILURE,
                facts if success else (),
                PRECOMPROMISE,
            )
        )

    host_scan = builtin_action(library, effects, BUILTIN_HOST_SCAN)
    origin = f"{len(steps) + 1}:{host_scan.id}"
    found = _stamp(scan_hosts(seed, env.scan_range, env), origin)
    record(host_scan, {}, found, bool(found))
    if not found:
        return None, steps, knowledge
    knowledge = apply_post(knowledge, host_scan, found)

    port_scan = builtin_action(library, effects, BUILTIN_PORT_SCAN)
    origin = f"{len(steps) + 1}:{port_scan.id}"
    services: Dict[str, List[Fact]] = {
        f.value: _stamp(scan_ports(seed, f.value, env), origin) for f in found
    }
    scanned = [f for facts in services.values() for f in facts]
    record(port_scan, {}, scanned, bool(scanned))
    knowledge = apply_post(knowledge, port_scan, scanned)

    for host_fact in found:
        view = Knowledge.from_facts([host_fact, *services[host_fact.value]])

        for agenda in applicable_agendas(agendas, view):
            _LOGGER.info("Trying agenda %s against %s", agenda.id, host_fact.value)
            spawned = None

            for action_id in agenda.steps:
                action = library[action_id]
                binding = {agenda.yields_agent_on: host_fact.value}
                for name in sorted(action.pre_conditions - set(binding)):
                    values = view.values(name) or knowledge.values(name)
                    if values:
                        binding[name] = values[0]

                origin = f"{len(steps) + 1}:{action.id}"
                outcome = execute(
                    action, binding, seed, env, effects.get(action_id), origin
                )
                record(action, binding, list(outcome.facts), outcome.success)
                if not outcome.success:
                    break

                knowledge = apply_post(knowledge, action, outcome.facts)
                view = view.union(outcome.facts)
                spawned = outcome.agent or spawned

            else:
                if spawned is not None:
                    return spawned, steps, knowledge

    _LOGGER.warning("Pre-compromise: no agenda compromised any host")
    return None, steps, knowledge


def escalation_techniques(
    library: Mapping[str, Action], knowledge: Knowledge
) -> List[Action]:
    return [
        a
        for a in library.values()
        if a.tactic_tag == TACTIC_PRIVILEGE_ESCALATION
        and not a.locked
        and is_executable(a, knowledge)
    ]


def ensure_privilege(
    action: Action,
    agent: Agent,
    library: Mapping[str, Action],
    env: Environment,
    knowledge: Knowledge,
    engine: RewardEngine,
    effects: Mapping[str, ActionEffect],
    exhausted: MutableSet[Tuple[str, tuple]],
    next_index: int,
) -> Tuple[Optional[Agent], List[StepRecord]]:
    """Return the agent that should run the action, escalating if need be.

    Techniques are tried best adapted reward first; a technique is tried at most once
    per binding (it is added to `exhausted`). The returned agent is None if every
    technique failed.
    """
    if not action.requires_elevated or agent.is_elevated:
        return agent, []

    existing = env.elevated_agent_on(agent.host_address)
    if existing is not None:
        return existing, []

    steps: List[StepRecord] = []
    for technique, reward in engine.rank(escalation_techniques(library, knowledge)):
        binding = next(
            (
                b
                for b in iter_bindings(technique, knowledge)
                if (technique.id, binding_key(b)) not in exhausted
            ),
            None,
        )
        if binding is None:
            continue

        index = next_index + len(steps)
        _LOGGER.info(
            "%s requires elevation, trying %s (%.2f)", action.id, technique.id, reward
        )
        outcome = execute(
            technique,
            binding,
            agent,
            env,
            effects.get(technique.id),
            f"{index}:{technique.id}",
        )
        exhausted.add((technique.id, binding_key(binding)))

        steps.append(
            StepRecord(
                index,
                technique.id,
                agent.id,
                binding,
                reward,
                SUCCESS if outcome.success else FAILURE,
                outcome.facts,
                ESCALATION,
            )
        )

        elevated = outcome.agent
        if (
            outcome.success
            and elevated is not None
            and elevated.is_elevated
            and elevated.host_address == agent.host_address
        ):
            return elevated, steps

    _LOGGER.warning("No escalation technique succeeded on %s", agent.host_address)
    return None, steps
