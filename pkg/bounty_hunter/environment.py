#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - the simulated target network.

Hosts, services, credentials, files and C2 agents. Actions are executed
declaratively: each action's effect is a set of fact templates read from the state
of one host, plus an optional failure script. There is no hidden entropy, so the
same environment and the same action sequence always give the same outcomes.
"""

from copy import deepcopy
from dataclasses import dataclass, field
import ipaddress
import logging
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .const import (
    AGENT_ANY,
    AGENT_ELEVATED,
    AGENT_ON_TARGET,
    AGENT_ORIGINS,
    AGENT_SEED,
    ON_AGENT,
    ON_ATTACKER,
    ON_CONTROLLER,
    ON_TARGET,
    ORIGIN_ESCALATION,
    ORIGIN_INITIAL_ACCESS,
    ORIGIN_LATERAL,
    ORIGIN_SEED,
    OS_DOMAIN_CONTROLLER,
    PRIV_ELEVATED,
    PRIV_USER,
    PRIVILEGES,
    SCOPE_KRBTGT,
    SCRIPT_ALWAYS_FAIL,
    SCRIPT_FAIL_N_TIMES,
    SCRIPT_SUCCESS,
    _dev_mode_,
)
from .exceptions import (
    CoherenceError,
    ConfigValidationError,
    ContractViolationError,
    UnknownHostError,
)
from .helpers import binding_str, synthetic_token
from .model import Action, Fact

DEV_MODE = _dev_mode_

_LOGGER = logging.getLogger(__name__)
if DEV_MODE:
    _LOGGER.setLevel(logging.DEBUG)

TOKEN_SOURCE = "token"  # a synthetic, deterministic value


@dataclass(frozen=True)
class Service:
    port: int
    protocol: str
    version: str = ""
    weaknesses: FrozenSet[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "weaknesses", frozenset(self.weaknesses))
        if not 1 <= self.port <= 65535:
            raise ConfigValidationError(f"invalid port: {self.port}", key="port")


@dataclass(frozen=True)
class Credential:
    principal: str
    secret: str
    scope: str


@dataclass(frozen=True)
class FileEntry:
    path: str
    tag: str = ""


@dataclass
class Host:
    """A simulated host; only its files change during a run."""

    address: str
    hostname: str
    os: str
    services: Tuple[Service, ...] = ()
    credentials: Tuple[Credential, ...] = ()
    files: List[FileEntry] = field(default_factory=list)
    domain: Optional[str] = None

    def __post_init__(self) -> None:
        self.services = tuple(self.services)
        self.credentials = tuple(self.credentials)
        self.files = list(self.files)

    def __str__(self) -> str:
        return f"{self.hostname} ({self.address})"

    def has_weakness(self, tag: str) -> bool:
        return any(tag in s.weaknesses for s in self.services)


@dataclass(frozen=True)
class Agent:
    """A simulated C2 agent; its privilege never changes."""

    id: str
    host_address: str
    privilege: str
    origin: str

    def __post_init__(self) -> None:
        if self.privilege not in PRIVILEGES:
            raise ValueError(f"unknown privilege: {self.privilege}")
        if self.origin not in AGENT_ORIGINS:
            raise ValueError(f"unknown agent origin: {self.origin}")

    @property
    def is_elevated(self) -> bool:
        return self.privilege == PRIV_ELEVATED

    @property
    def is_seed(self) -> bool:
        return self.origin == ORIGIN_SEED


@dataclass(frozen=True)
class FactTemplate:
    """A fact to produce: a literal value, or a source read from host state."""

    fact: str
    source: Optional[str] = None
    value: Optional[str] = None


@dataclass(frozen=True)
class FailureScript:
    mode: str = SCRIPT_SUCCESS
    times: int = 0

    def fails(self, execution: int) -> bool:
        """Return True if the n-th (1-based) execution of the action fails."""
        if self.mode == SCRIPT_ALWAYS_FAIL:
            return True
        if self.mode == SCRIPT_FAIL_N_TIMES:
            return execution <= self.times
        return False


@dataclass(frozen=True)
class ActionEffect:
    """How an action plays out in the simulator."""

    action_id: str
    required_agent: str = AGENT_ANY
    produces: Tuple[FactTemplate, ...] = ()
    failure_script: Optional[FailureScript] = None
    on: str = ON_AGENT
    target: Optional[str] = None
    spawns_agent: Optional[str] = None
    creates_file: Optional[FileEntry] = None
    requires_weakness: Optional[str] = None
    builtin: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "produces", tuple(self.produces))

    @property
    def fact_names(self) -> FrozenSet[str]:
        return frozenset(t.fact for t in self.produces)


@dataclass(frozen=True)
class Outcome:
    success: bool
    facts: Tuple[Fact, ...] = ()
    agent: Optional[Agent] = None  # an agent spawned by this execution
    detail: str = ""


def default_effect(action: Action) -> ActionEffect:
    """Return the effect of an action with none declared: one token per post."""
    return ActionEffect(
        action.id,
        produces=tuple(
            FactTemplate(name, source=TOKEN_SOURCE)
            for name in sorted(action.post_conditions)
        ),
    )


class Environment:
    """The simulated target network, with its agents.

    One instance per run: `copy()` before handing it to a run.
    """

    def __init__(
        self,
        hosts: Iterable[Host],
        attacker: str,
        scan_range: Optional[str] = None,
        name: str = "",
        foothold: Optional[str] = None,
        known_facts: Optional[Mapping[str, Iterable[str]]] = None,
    ) -> None:
        self.name = name
        self.hosts: Dict[str, Host] = {}
        for host in hosts:
            if host.address in self.hosts:
                raise ConfigValidationError(
                    f"duplicate host address: {host.address}", key="hosts"
                )
            self.hosts[host.address] = host

        self.attacker_address = attacker
        self.scan_range = scan_range
        self.foothold = foothold
        self.known_facts = {k: list(v) for k, v in (known_facts or {}).items()}

        self.agents: Dict[str, Agent] = {}
        self._executions: Dict[str, int] = {}

        self.validate()
        self._add_agent(attacker, PRIV_USER, ORIGIN_SEED)

    def __repr__(self) -> str:
        return f"Environment({self.name!r}, hosts={list(self.hosts)})"

    def validate(self) -> None:
        if self.attacker_address not in self.hosts:
            raise ConfigValidationError(
                f"the attacker host ({self.attacker_address}) is not defined",
                key="attacker",
            )
        if self.foothold is not None:
            if self.foothold not in self.hosts:
                raise ConfigValidationError(
                    f"the foothold host ({self.foothold}) is not defined",
                    key="foothold",
                )
            if self.foothold == self.attacker_address:
                raise ConfigValidationError(
                    "the foothold cannot be the attacker host", key="foothold"
                )
        if self.scan_range is not None:
            try:
                ipaddress.ip_network(self.scan_range, strict=False)
            except ValueError as exc:
                raise ConfigValidationError(str(exc), key="scan_range")
        for name, values in self.known_facts.items():
            if not all(isinstance(v, str) and v for v in values):
                raise ConfigValidationError(
                    f"known fact {name} has an empty value", key="known_facts"
                )

        controllers: Dict[str, str] = {}
        for host in self.hosts.values():
            try:
                ipaddress.ip_address(host.address)
            except ValueError as exc:
                raise ConfigValidationError(str(exc), key="address")

            if host.os == OS_DOMAIN_CONTROLLER:
                if host.domain in controllers:
                    raise ConfigValidationError(
                        f"domain {host.domain} has more than one controller "
                        f"({controllers[host.domain]}, {host.address})",
                        key="os",
                    )
                controllers[host.domain] = host.address

            elif any(c.scope == SCOPE_KRBTGT for c in host.credentials):
                raise ConfigValidationError(
                    f"{host} holds a {SCOPE_KRBTGT} credential, "
                    "but is not a domain controller",
                    key="credentials",
                )

            seen = set()
            for svc in host.services:
                if (svc.port, svc.protocol) in seen:
                    raise ConfigValidationError(
                        f"{host} has a duplicate service: {svc.port}/{svc.protocol}",
                        key="services",
                    )
                seen.add((svc.port, svc.protocol))

    def copy(self) -> "Environment":
        return deepcopy(self)

    def host(self, address: str) -> Host:
        try:
            return self.hosts[address]
        except KeyError:
            raise UnknownHostError(address)

    def find_host(self, value: str) -> Optional[Host]:
        """Return the host with this address or (case-insensitive) hostname."""
        if value in self.hosts:
            return self.hosts[value]
        for host in self.hosts.values():
            if host.hostname.lower() == value.lower():
                return host
        return None

    @property
    def attacker_host(self) -> Host:
        return self.hosts[self.attacker_address]

    @property
    def seed_agent(self) -> Agent:
        return next(a for a in self.agents.values() if a.is_seed)

    def controller_of(self, host: Host) -> Optional[Host]:
        if host.domain is None:
            return None
        return next(
            (
                h
                for h in self.hosts.values()
                if h.os == OS_DOMAIN_CONTROLLER and h.domain == host.domain
            ),
            None,
        )

    def agents_on(self, address: str) -> List[Agent]:
        return [a for a in self.agents.values() if a.host_address == address]

    def elevated_agent_on(self, address: str) -> Optional[Agent]:
        return next((a for a in self.agents_on(address) if a.is_elevated), None)

    def _add_agent(self, address: str, privilege: str, origin: str) -> Agent:
        agent = Agent(f"agent-{len(self.agents)}", address, privilege, origin)
        self.agents[agent.id] = agent
        _LOGGER.info("Spawned %s (%s, %s) on %s", agent.id, privilege, origin, address)
        return agent

    def executions(self, action_id: str) -> int:
        return self._executions.get(action_id, 0)


def spawn_agent(env: Environment, host: Host, privilege: str, origin: str) -> Agent:
    """Register a new agent on the host; an elevated agent is spawned only once."""
    if host.address not in env.hosts:
        raise UnknownHostError(host.address)

    if privilege == PRIV_ELEVATED:
        existing = env.elevated_agent_on(host.address)
        if existing is not None:
            return existing

    return env._add_agent(host.address, privilege, origin)


def _credentials(scope: str, attr: str) -> Callable:
    def resolve(host: Host, env: Environment) -> List[str]:
        return [getattr(c, attr) for c in host.credentials if c.scope == scope]

    return resolve


def _files(tag: str) -> Callable:
    def resolve(host: Host, env: Environment) -> List[str]:
        return [f.path for f in host.files if f.tag == tag]

    return resolve


def _controller(attr: str) -> Callable:
    def resolve(host: Host, env: Environment) -> List[str]:
        ctl = env.controller_of(host)
        return [getattr(ctl, attr)] if ctl else []

    return resolve


def _domain_hosts(host: Host, env: Environment) -> List[str]:
    if host.domain is None:
        return []
    return sorted(
        (
            h.address
            for h in env.hosts.values()
            if h.domain == host.domain and h is not host
        ),
        key=ipaddress.ip_address,
    )


SOURCES: Dict[str, Callable[[Host, Environment], List[str]]] = {
    "host.address": lambda h, e: [h.address],
    "host.hostname": lambda h, e: [h.hostname],
    "host.domain": lambda h, e: [h.domain] if h.domain else [],
    "host.os": lambda h, e: [h.os],
    "domain.controller": _controller("hostname"),
    "domain.controller.address": _controller("address"),
    "domain.hosts": _domain_hosts,
    "attacker.address": lambda h, e: [e.attacker_address],
}


def _source(name: str) -> Optional[Callable]:
    if name in SOURCES:
        return SOURCES[name]
    parts = name.split(".")
    if len(parts) != 3:
        return None
    if parts[0] == "credential" and parts[2] in ("principal", "secret"):
        return _credentials(parts[1], parts[2])
    if parts[0] == "file" and parts[2] == "path":
        return _files(parts[1])
    return None


def is_valid_source(name: str) -> bool:
    return name == TOKEN_SOURCE or _source(name) is not None


def _context_host(
    effect: ActionEffect, binding: Mapping[str, str], agent: Agent, env: Environment
) -> Optional[Host]:
    if effect.on == ON_TARGET:
        value = binding.get(effect.target) if effect.target else None
        return env.find_host(value) if value else None
    if effect.on == ON_ATTACKER:
        return env.attacker_host
    if effect.on == ON_CONTROLLER:
        return env.controller_of(env.host(agent.host_address))
    return env.host(agent.host_address)


def check_coherence(
    action: Action, effect: ActionEffect, agent: Agent, env: Environment
) -> None:
    """Raise CoherenceError if the agent cannot run the action."""
    if env.agents.get(agent.id) != agent:
        raise CoherenceError(f"{agent.id} is not an agent of this environment")

    if action.requires_elevated and not agent.is_elevated:
        raise CoherenceError(f"{action.id} requires an elevated agent, not {agent.id}")

    required = effect.required_agent
    if required == AGENT_SEED and not agent.is_seed:
        raise CoherenceError(f"{action.id} must run on the attacker's seed agent")
    if required in (AGENT_ON_TARGET, AGENT_ELEVATED) and agent.is_seed:
        raise CoherenceError(f"{action.id} must run on an agent on the target")
    if required == AGENT_ELEVATED and not agent.is_elevated:
        raise CoherenceError(f"{action.id} requires an elevated agent, not {agent.id}")


def execute(
    action: Action,
    binding: Mapping[str, str],
    agent: Agent,
    env: Environment,
    effect: Optional[ActionEffect] = None,
    origin: Optional[str] = None,
) -> Outcome:
    """Execute an action on an agent, and return the facts it yields (if any).

    A scripted failure, or nothing to be found, is an in-fiction failure (an
    Outcome). Running an action on the wrong agent is a CoherenceError.
    """
    if effect is None:
        effect = default_effect(action)
    if effect.builtin:
        raise ContractViolationError(
            f"{action.id} is a {effect.builtin}, run by the pre-compromise component"
        )
    check_coherence(action, effect, agent, env)

    execution = env._executions[action.id] = env.executions(action.id) + 1
    origin = origin or action.id

    def failed(detail: str) -> Outcome:
        _LOGGER.info("%s failed on %s: %s", action.id, agent.id, detail)
        return Outcome(False, detail=detail)

    if effect.failure_script and effect.failure_script.fails(execution):
        return failed(f"scripted failure ({effect.failure_script.mode})")

    host = _context_host(effect, binding, agent, env)
    if host is None:
        return failed(f"no {effect.on} host for binding {binding_str(binding)}")

    if effect.requires_weakness and not host.has_weakness(effect.requires_weakness):
        return failed(f"{host} is not affected ({effect.requires_weakness})")

    facts: List[Fact] = []
    for template in effect.produces:
        if template.value is not None:
            values = [template.value]
        elif template.source == TOKEN_SOURCE:
            values = [
                synthetic_token(
                    action.id, template.fact, binding_str(binding), host.address
                )
            ]
        else:
            values = _source(template.source)(host, env)

        if not values:
            return failed(f"nothing found for {template.fact}")
        facts.extend(Fact(template.fact, v, origin) for v in values)

    undeclared = {f.name for f in facts} - action.post_conditions
    if undeclared:
        raise ContractViolationError(
            f"{action.id} produced {sorted(undeclared)}, which are not post-conditions"
        )

    if effect.creates_file is not None:
        host.files.append(effect.creates_file)

    spawned = None
    if effect.spawns_agent:
        if agent.is_seed:
            spawn_origin = ORIGIN_INITIAL_ACCESS
        elif host.address != agent.host_address:
            spawn_origin = ORIGIN_LATERAL
        else:
            spawn_origin = ORIGIN_ESCALATION
        spawned = spawn_agent(env, host, effect.spawns_agent, spawn_origin)

    _LOGGER.info("%s succeeded on %s, facts = %s", action.id, agent.id, facts)
    return Outcome(True, tuple(facts), spawned)
