#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - Schema processor.

Parses (and renders) the three scenario files: the planner config
(`*.planner.yml`), action libraries (`*.actions.yml`) and the environment
(`*.env.yml`). Errors name the offending key, and its line in the document.
"""

from dataclasses import dataclass, field
import ipaddress
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import voluptuous as vol
import yaml

from .access import InitialAccessAgenda, Requirement, check_precompromise
from .const import (
    BUILTINS,
    CREDENTIAL_SCOPES,
    DEFAULT_DEPTH,
    DEFAULT_DETECTABILITY_FACTOR,
    DEFAULT_DETECTABILITY_WEIGHT,
    DEFAULT_DISCOUNT,
    DEFAULT_GOAL_REWARD,
    DEFAULT_REWARD,
    DEFAULT_REWARD_UPDATE,
    EFFECT_HOSTS,
    FACT_HOST_IP,
    FAILURE_MODES,
    HOST_OS,
    AGENT_ANY,
    AGENT_ELEVATED,
    ON_AGENT,
    ON_TARGET,
    PRIVILEGES,
    REQUIRED_AGENTS,
    SCRIPT_SUCCESS,
    TACTIC_RECONNAISSANCE,
    _dev_mode_,
)
from .environment import (
    ActionEffect,
    Credential,
    Environment,
    FactTemplate,
    FailureScript,
    FileEntry,
    Host,
    Service,
    is_valid_source,
)
from .exceptions import ConfigValidationError
from .helpers import is_valid_action_id, is_valid_fact_name
from .model import Action, GoalSet, Library, make_library
from .planner import PlannerConfig, validate_config
from .rewards import RewardUpdateRule, detectability_from_telemetry

DEV_MODE = _dev_mode_

_LOGGER = logging.getLogger(__name__)
if DEV_MODE:
    _LOGGER.setLevel(logging.DEBUG)

# planner config keys
NAME = "name"
DESCRIPTION = "description"
GOAL_ACTIONS = "goal_actions"
SEED = "seed"
WEIGHTED_RANDOM = "weighted_random"
DEPTH = "depth"
DISCOUNT = "discount"
DEFAULT_GOAL_REWARD_KEY = "default_goal_reward"
GOAL_REWARD = "goal_reward"  # alias of default_goal_reward
DEFAULT_REWARD_KEY = "default_reward"
DEFAULT_REWARD_UPDATE_KEY = "default_reward_update"
DETECTABILITY_WEIGHT = "detectability_weight"
DEFAULT_DETECTABILITY_FACTOR_KEY = "default_detectability_factor"
ACTION_REWARDS = "action_rewards"
LOCKED_ACTIONS = "locked_actions"
REWARD_UPDATES = "reward_updates"

# action library keys
ACTIONS = "actions"
AGENDAS = "agendas"
ID = "id"
TACTIC = "tactic"
REWARD = "reward"
DETECTABILITY = "detectability"
TELEMETRY = "telemetry"
REQUIRES_ELEVATED = "requires_elevated"
LOCKED = "locked"
UNLOCKED_BY = "unlocked_by"
PRE = "pre"
POST = "post"
EFFECT = "effect"
AGENT = "agent"
ON = "on"
TARGET = "target"
PRODUCES = "produces"
FACT = "fact"
FROM = "from"
VALUE = "value"
FAILURE = "failure"
MODE = "mode"
TIMES = "times"
SPAWNS_AGENT = "spawns_agent"
CREATES_FILE = "creates_file"
REQUIRES_WEAKNESS = "requires_weakness"
BUILTIN = "builtin"
REQUIRES = "requires"
EQUALS = "equals"
PATTERN = "pattern"
STEPS = "steps"
YIELDS_AGENT_ON = "yields_agent_on"

# environment keys
SCAN_RANGE = "scan_range"
ATTACKER = "attacker"
FOOTHOLD = "foothold"
KNOWN_FACTS = "known_facts"
HOSTS = "hosts"
ADDRESS = "address"
HOSTNAME = "hostname"
OS = "os"
DOMAIN = "domain"
SERVICES = "services"
PORT = "port"
PROTOCOL = "protocol"
VERSION = "version"
WEAKNESSES = "weaknesses"
CREDENTIALS = "credentials"
PRINCIPAL = "principal"
SECRET = "secret"
SCOPE = "scope"
FILES = "files"
PATH = "path"
TAG = "tag"


def _number(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise vol.Invalid(f"expected a number, not {value!r}")
    return value


def _integer(value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise vol.Invalid(f"expected an integer, not {value!r}")
    return value


def _action_id(value):
    if isinstance(value, str) and value.startswith("<") and value.endswith(">"):
        raise vol.Invalid(f"use the bare action id, not the placeholder {value}")
    if not is_valid_action_id(value):
        raise vol.Invalid(f"invalid action id: {value!r}")
    return value


def _fact_name(value):
    if not is_valid_fact_name(value):
        raise vol.Invalid(f"invalid fact name: {value!r}")
    return value


def _source(value):
    if not isinstance(value, str) or not is_valid_source(value):
        raise vol.Invalid(f"unknown fact source: {value!r}")
    return value


def _ip_address(value):
    try:
        return str(ipaddress.ip_address(value))
    except ValueError:
        raise vol.Invalid(f"invalid IP address: {value!r}")


def _ip_network(value):
    try:
        ipaddress.ip_network(value, strict=False)
    except (TypeError, ValueError):
        raise vol.Invalid(f"invalid IP range: {value!r}")
    return value


def _one_source(template: dict) -> dict:
    if (FROM in template) == (VALUE in template):
        raise vol.Invalid(f"exactly one of '{FROM}' and '{VALUE}' is required")
    return template


NUMBER = _number
INTEGER = _integer
NON_NEGATIVE = vol.All(_integer, vol.Range(min=0))
POSITIVE = vol.All(_number, vol.Range(min=0, min_included=False))
ACTION_ID = _action_id
FACT_NAME = _fact_name
IP_ADDRESS = _ip_address


def _listed(validator) -> vol.Any:
    return vol.Any(None, [validator])


PLANNER_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required(NAME): str,
        vol.Optional(DESCRIPTION, default=""): vol.Any(None, str),
        vol.Required(GOAL_ACTIONS): vol.All([ACTION_ID], vol.Length(min=1)),
        vol.Optional(SEED, default=None): vol.Any(None, NON_NEGATIVE),
        vol.Optional(WEIGHTED_RANDOM, default=False): bool,
        vol.Optional(DEPTH, default=DEFAULT_DEPTH): vol.All(INTEGER, vol.Range(min=1)),
        vol.Optional(DISCOUNT, default=DEFAULT_DISCOUNT): vol.All(
            NUMBER, vol.Range(min=0, max=1, min_included=False)
        ),
        vol.Optional(DEFAULT_GOAL_REWARD_KEY): NUMBER,
        vol.Optional(GOAL_REWARD): NUMBER,
        vol.Optional(DEFAULT_REWARD_KEY, default=DEFAULT_REWARD): NUMBER,
        vol.Optional(DEFAULT_REWARD_UPDATE_KEY, default=DEFAULT_REWARD_UPDATE): NUMBER,
        vol.Optional(
            DETECTABILITY_WEIGHT, default=DEFAULT_DETECTABILITY_WEIGHT
        ): NUMBER,
        vol.Optional(
            DEFAULT_DETECTABILITY_FACTOR_KEY, default=DEFAULT_DETECTABILITY_FACTOR
        ): POSITIVE,
        vol.Optional(ACTION_REWARDS, default={}): vol.Any(None, {ACTION_ID: NUMBER}),
        vol.Optional(LOCKED_ACTIONS, default=[]): _listed(ACTION_ID),
        vol.Optional(REWARD_UPDATES, default={}): vol.Any(
            None, {ACTION_ID: {ACTION_ID: NUMBER}}
        ),
    }
)

TEMPLATE_SCHEMA = vol.All(
    vol.Schema(
        {
            vol.Required(FACT): FACT_NAME,
            vol.Optional(FROM): _source,
            vol.Optional(VALUE): vol.All(str, vol.Length(min=1)),
        }
    ),
    _one_source,
)
EFFECT_SCHEMA = vol.Schema(
    {
        vol.Optional(AGENT, default=AGENT_ANY): vol.In(REQUIRED_AGENTS),
        vol.Optional(ON, default=ON_AGENT): vol.In(EFFECT_HOSTS),
        vol.Optional(TARGET, default=None): vol.Any(None, FACT_NAME),
        vol.Optional(PRODUCES, default=[]): _listed(TEMPLATE_SCHEMA),
        vol.Optional(FAILURE, default=None): vol.Any(
            None,
            {
                vol.Required(MODE): vol.In(FAILURE_MODES),
                vol.Optional(TIMES, default=0): NON_NEGATIVE,
            },
        ),
        vol.Optional(SPAWNS_AGENT, default=None): vol.Any(None, vol.In(PRIVILEGES)),
        vol.Optional(CREATES_FILE, default=None): vol.Any(
            None, {vol.Required(PATH): str, vol.Optional(TAG, default=""): str}
        ),
        vol.Optional(REQUIRES_WEAKNESS, default=None): vol.Any(None, str),
        vol.Optional(BUILTIN, default=None): vol.Any(None, vol.In(BUILTINS)),
    }
)
TELEMETRY_SCHEMA = vol.Schema(
    {
        vol.Optional(level, default=0): NON_NEGATIVE
        for level in ("high", "medium", "low", "log_volume")
    }
)
_EFFECT_KEYS = (AGENT, TARGET, PRODUCES, BUILTIN)

ACTION_SCHEMA = vol.Schema(
    {
        vol.Required(ID): ACTION_ID,
        vol.Optional(NAME, default=""): vol.Any(None, str),
        vol.Optional(TACTIC, default=""): vol.Any(None, str),
        vol.Optional(REWARD, default=None): vol.Any(None, NUMBER),
        vol.Exclusive(DETECTABILITY, "detectability"): POSITIVE,
        vol.Exclusive(TELEMETRY, "detectability"): TELEMETRY_SCHEMA,
        vol.Optional(REQUIRES_ELEVATED, default=False): bool,
        vol.Optional(LOCKED, default=False): bool,
        vol.Optional(UNLOCKED_BY, default=[]): _listed(ACTION_ID),
        vol.Optional(PRE, default=[]): _listed(FACT_NAME),
        vol.Optional(POST, default=[]): _listed(FACT_NAME),
        vol.Optional(EFFECT, default=None): vol.Any(None, EFFECT_SCHEMA),
    }
)
REQUIREMENT_SCHEMA = vol.Schema(
    {
        vol.Required(FACT): FACT_NAME,
        vol.Exclusive(EQUALS, "predicate"): str,
        vol.Exclusive(PATTERN, "predicate"): str,
    }
)
AGENDA_SCHEMA = vol.Schema(
    {
        vol.Required(ID): ACTION_ID,
        vol.Optional(REQUIRES, default=[]): _listed(REQUIREMENT_SCHEMA),
        vol.Required(STEPS): vol.All([ACTION_ID], vol.Length(min=1)),
        vol.Optional(YIELDS_AGENT_ON, default=FACT_HOST_IP): FACT_NAME,
    }
)
ACTION_LIBRARY_SCHEMA = vol.Schema(
    {
        vol.Optional(ACTIONS, default=[]): _listed(ACTION_SCHEMA),
        vol.Optional(AGENDAS, default=[]): _listed(AGENDA_SCHEMA),
    }
)

SERVICE_SCHEMA = vol.Schema(
    {
        vol.Required(PORT): INTEGER,
        vol.Required(PROTOCOL): str,
        vol.Optional(VERSION, default=""): vol.Any(None, str),
        vol.Optional(WEAKNESSES, default=[]): _listed(str),
    }
)
CREDENTIAL_SCHEMA = vol.Schema(
    {
        vol.Required(PRINCIPAL): str,
        vol.Required(SECRET): str,
        vol.Required(SCOPE): vol.In(CREDENTIAL_SCOPES),
    }
)
FILE_SCHEMA = vol.Schema({vol.Required(PATH): str, vol.Optional(TAG, default=""): str})
HOST_SCHEMA = vol.Schema(
    {
        vol.Required(ADDRESS): IP_ADDRESS,
        vol.Required(HOSTNAME): str,
        vol.Required(OS): vol.In(HOST_OS),
        vol.Optional(DOMAIN, default=None): vol.Any(None, str),
        vol.Optional(SERVICES, default=[]): _listed(SERVICE_SCHEMA),
        vol.Optional(CREDENTIALS, default=[]): _listed(CREDENTIAL_SCHEMA),
        vol.Optional(FILES, default=[]): _listed(FILE_SCHEMA),
    }
)
ENVIRONMENT_SCHEMA = vol.Schema(
    {
        vol.Optional(NAME, default=""): vol.Any(None, str),
        vol.Optional(SCAN_RANGE, default=None): vol.Any(None, _ip_network),
        vol.Required(ATTACKER): IP_ADDRESS,
        vol.Optional(FOOTHOLD, default=None): vol.Any(None, IP_ADDRESS),
        vol.Optional(KNOWN_FACTS, default={}): vol.Any(
            None, {FACT_NAME: [vol.All(str, vol.Length(min=1))]}
        ),
        vol.Required(HOSTS): vol.All([HOST_SCHEMA], vol.Length(min=1)),
    }
)


class _Document:
    """A YAML document, with the means to locate its keys."""

    def __init__(self, text: str, source: Optional[str] = None) -> None:
        self.text = text
        self.source = source
        try:
            self.data = yaml.safe_load(text)
            self._root = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigValidationError(
                getattr(exc, "problem", None) or str(exc),
                line=mark.line + 1 if mark else None,
                source=source,
            )
        if not isinstance(self.data, dict):
            raise ConfigValidationError("expected a mapping", line=1, source=source)

    def line(self, path: Sequence) -> Optional[int]:
        """Return the 1-based line of the deepest node along the path."""
        node, mark = self._root, None
        for part in path:
            if isinstance(node, yaml.MappingNode):
                found = next(
                    ((k, v) for k, v in node.value if k.value == str(part)), None
                )
                if found is None:
                    break
                mark, node = found[0].start_mark, found[1]
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
                if part >= len(node.value):
                    break
                node = node.value[part]
                mark = node.start_mark
            else:
                break
        return None if mark is None else mark.line + 1

    def find(self, key: str, within: Optional[str] = None) -> Optional[int]:
        """Return the 1-based line of the shallowest `key`.

        With `within`, only the mappings whose id is `within` are searched.
        """
        queue: List[yaml.Node] = [self._root]
        while queue:
            node = queue.pop(0)
            if isinstance(node, yaml.MappingNode):
                pairs = {
                    k.value: (k, v)
                    for k, v in node.value
                    if isinstance(k, yaml.ScalarNode)
                }
                owner = pairs.get(ID, (None, None))[1]
                if key in pairs and (
                    within is None or getattr(owner, "value", None) == within
                ):
                    return pairs[key][0].start_mark.line + 1
                queue.extend(v for _, v in node.value)
            elif isinstance(node, yaml.SequenceNode):
                queue.extend(node.value)
        return None

    def error(self, message: str, path: Sequence) -> ConfigValidationError:
        key = next((p for p in reversed(path) if isinstance(p, str)), None)
        return ConfigValidationError(
            message, key=key, line=self.line(path), source=self.source
        )

    def validate(self, schema: vol.Schema) -> Dict[str, Any]:
        try:
            return schema(self.data)
        except vol.Invalid as exc:
            raise self.error(exc.msg, list(exc.path))


def _rewrap(doc: _Document, path: Sequence, exc: ConfigValidationError):
    """Return the error located in the document (keeping its own key, if any)."""
    located = doc.error(exc.message, path)
    if exc.key is not None and exc.key not in path:
        located.key = exc.key
    return located


def parse_planner_config(text: str, source: Optional[str] = None) -> PlannerConfig:
    """Return the planner config of a document; ids are resolved by the bundle."""
    doc = _Document(text, source)
    data = doc.validate(PLANNER_CONFIG_SCHEMA)

    if DEFAULT_GOAL_REWARD_KEY in data and GOAL_REWARD in data:
        raise doc.error(
            f"'{GOAL_REWARD}' is an alias of '{DEFAULT_GOAL_REWARD_KEY}', not both",
            [GOAL_REWARD],
        )
    goal_reward = data.get(
        DEFAULT_GOAL_REWARD_KEY, data.get(GOAL_REWARD, DEFAULT_GOAL_REWARD)
    )

    try:
        return PlannerConfig(
            name=data[NAME],
            description=data[DESCRIPTION] or "",
            goal_actions=GoalSet(tuple(data[GOAL_ACTIONS])),
            seed=data[SEED],
            weighted_random=data[WEIGHTED_RANDOM],
            depth=data[DEPTH],
            discount=data[DISCOUNT],
            default_goal_reward=goal_reward,
            default_reward=data[DEFAULT_REWARD_KEY],
            default_reward_update=data[DEFAULT_REWARD_UPDATE_KEY],
            detectability_weight=data[DETECTABILITY_WEIGHT],
            default_detectability_factor=data[DEFAULT_DETECTABILITY_FACTOR_KEY],
            action_rewards=data[ACTION_REWARDS] or {},
            locked_actions=frozenset(data[LOCKED_ACTIONS] or ()),
            reward_updates=tuple(
                RewardUpdateRule(trigger, dict(deltas or {}))
                for trigger, deltas in (data[REWARD_UPDATES] or {}).items()
            ),
        )
    except ConfigValidationError as exc:
        raise _rewrap(doc, [exc.key] if exc.key else [], exc)


def _effect(action: Action, data: dict) -> ActionEffect:
    failure = data[FAILURE]
    created = data[CREATES_FILE]
    return ActionEffect(
        action.id,
        required_agent=data[AGENT],
        produces=tuple(
            FactTemplate(t[FACT], source=t.get(FROM), value=t.get(VALUE))
            for t in data[PRODUCES] or ()
        ),
        failure_script=(
            FailureScript(failure[MODE], failure[TIMES]) if failure else None
        ),
        on=data[ON],
        target=data[TARGET],
        spawns_agent=data[SPAWNS_AGENT],
        creates_file=FileEntry(created[PATH], created[TAG]) if created else None,
        requires_weakness=data[REQUIRES_WEAKNESS],
        builtin=data[BUILTIN],
    )


def _check_effect(action: Action, effect: ActionEffect) -> None:
    undeclared = effect.fact_names - action.post_conditions
    if undeclared:
        raise ConfigValidationError(
            f"the effect produces {sorted(undeclared)}, "
            f"which are not post-conditions of {action.id}",
            key=PRODUCES,
        )
    if effect.on == ON_TARGET and effect.target is None:
        raise ConfigValidationError(
            f"an effect on the target must name the '{TARGET}' fact", key=TARGET
        )
    if effect.target is not None and effect.target not in action.pre_conditions:
        raise ConfigValidationError(
            f"the target fact {effect.target} is not a pre-condition of {action.id}",
            key=TARGET,
        )
    if effect.required_agent == AGENT_ELEVATED and not action.requires_elevated:
        raise ConfigValidationError(
            f"{action.id} must set '{REQUIRES_ELEVATED}' to run on an elevated agent",
            key=AGENT,
        )
    if effect.builtin and action.tactic_tag != TACTIC_RECONNAISSANCE:
        raise ConfigValidationError(
            f"a {effect.builtin} action must have the {TACTIC_RECONNAISSANCE} tactic",
            key=BUILTIN,
        )


def parse_action_library(
    text: str, source: Optional[str] = None
) -> Tuple[Library, Dict[str, ActionEffect], List[InitialAccessAgenda]]:
    """Return the actions, their effects, and the initial access agendas."""
    doc = _Document(text, source)
    data = doc.validate(ACTION_LIBRARY_SCHEMA)

    actions: List[Action] = []
    effects: Dict[str, ActionEffect] = {}
    for idx, item in enumerate(data[ACTIONS] or ()):
        path = [ACTIONS, idx]
        try:
            if TELEMETRY in item:
                detectability = detectability_from_telemetry(
                    item[TELEMETRY]["high"],
                    item[TELEMETRY]["medium"],
                    item[TELEMETRY]["low"],
                    item[TELEMETRY]["log_volume"],
                )
            else:
                detectability = item.get(DETECTABILITY)

            action = Action(
                id=item[ID],
                display_name=item[NAME] or "",
                reward=item[REWARD],
                pre_conditions=frozenset(item[PRE] or ()),
                post_conditions=frozenset(item[POST] or ()),
                detectability=detectability,
                requires_elevated=item[REQUIRES_ELEVATED],
                locked=item[LOCKED],
                unlocked_by=frozenset(item[UNLOCKED_BY] or ()),
                tactic_tag=item[TACTIC] or "",
            )
            if action.id in (a.id for a in actions):
                raise ConfigValidationError(f"duplicate action id: {action.id}", key=ID)
            actions.append(action)

            if item[EFFECT] is not None:
                effects[action.id] = _effect(action, item[EFFECT])
                _check_effect(action, effects[action.id])

        except ConfigValidationError as exc:
            located = path + ([EFFECT, exc.key] if exc.key in _EFFECT_KEYS else [])
            raise _rewrap(doc, located if exc.key != ID else path + [ID], exc)

    agendas: List[InitialAccessAgenda] = []
    for idx, item in enumerate(data[AGENDAS] or ()):
        if item[ID] in (a.id for a in agendas):
            raise doc.error(f"duplicate agenda id: {item[ID]}", [AGENDAS, idx, ID])
        agendas.append(
            InitialAccessAgenda(
                item[ID],
                tuple(
                    Requirement(r[FACT], r.get(EQUALS), r.get(PATTERN))
                    for r in item[REQUIRES] or ()
                ),
                tuple(item[STEPS]),
                item[YIELDS_AGENT_ON],
            )
        )

    return make_library(actions), effects, agendas


def parse_environment(text: str, source: Optional[str] = None) -> Environment:
    doc = _Document(text, source)
    data = doc.validate(ENVIRONMENT_SCHEMA)

    hosts = []
    for idx, item in enumerate(data[HOSTS]):
        try:
            hosts.append(
                Host(
                    address=item[ADDRESS],
                    hostname=item[HOSTNAME],
                    os=item[OS],
                    domain=item[DOMAIN],
                    services=tuple(
                        Service(
                            s[PORT],
                            s[PROTOCOL],
                            s[VERSION] or "",
                            frozenset(s[WEAKNESSES] or ()),
                        )
                        for s in item[SERVICES] or ()
                    ),
                    credentials=tuple(
                        Credential(c[PRINCIPAL], c[SECRET], c[SCOPE])
                        for c in item[CREDENTIALS] or ()
                    ),
                    files=[FileEntry(f[PATH], f[TAG]) for f in item[FILES] or ()],
                )
            )
        except ConfigValidationError as exc:
            raise _rewrap(doc, [HOSTS, idx, SERVICES], exc)

    try:
        return Environment(
            hosts,
            attacker=data[ATTACKER],
            scan_range=data[SCAN_RANGE],
            name=data[NAME] or "",
            foothold=data[FOOTHOLD],
            known_facts=data[KNOWN_FACTS] or {},
        )
    except ConfigValidationError as exc:
        top = exc.key in (ATTACKER, FOOTHOLD, SCAN_RANGE)
        raise _rewrap(doc, [exc.key] if top else [HOSTS], exc)


def _dump(data: Mapping) -> str:
    return yaml.safe_dump(dict(data), sort_keys=False, allow_unicode=True)


def render_planner_config(config: PlannerConfig) -> str:
    return _dump(
        {
            NAME: config.name,
            DESCRIPTION: config.description,
            GOAL_ACTIONS: list(config.goal_actions),
            SEED: config.seed,
            WEIGHTED_RANDOM: config.weighted_random,
            DEPTH: config.depth,
            DISCOUNT: config.discount,
            DEFAULT_GOAL_REWARD_KEY: config.default_goal_reward,
            DEFAULT_REWARD_KEY: config.default_reward,
            DEFAULT_REWARD_UPDATE_KEY: config.default_reward_update,
            DETECTABILITY_WEIGHT: config.detectability_weight,
            DEFAULT_DETECTABILITY_FACTOR_KEY: config.default_detectability_factor,
            ACTION_REWARDS: dict(config.action_rewards),
            LOCKED_ACTIONS: sorted(config.locked_actions),
            REWARD_UPDATES: {
                r.trigger_action_id: dict(r.deltas) for r in config.reward_updates
            },
        }
    )


def _render_effect(effect: ActionEffect) -> Dict[str, Any]:
    result: Dict[str, Any] = {AGENT: effect.required_agent, ON: effect.on}
    if effect.target:
        result[TARGET] = effect.target
    if effect.produces:
        result[PRODUCES] = [
            {FACT: t.fact, VALUE: t.value}
            if t.value is not None
            else {FACT: t.fact, FROM: t.source}
            for t in effect.produces
        ]
    script = effect.failure_script
    if script is not None and script.mode != SCRIPT_SUCCESS:
        result[FAILURE] = {MODE: script.mode, TIMES: script.times}
    if effect.spawns_agent:
        result[SPAWNS_AGENT] = effect.spawns_agent
    if effect.creates_file:
        result[CREATES_FILE] = {
            PATH: effect.creates_file.path,
            TAG: effect.creates_file.tag,
        }
    if effect.requires_weakness:
        result[REQUIRES_WEAKNESS] = effect.requires_weakness
    if effect.builtin:
        result[BUILTIN] = effect.builtin
    return result


def render_action_library(
    library: Mapping[str, Action],
    effects: Optional[Mapping[str, ActionEffect]] = None,
    agendas: Iterable[InitialAccessAgenda] = (),
) -> str:
    effects = effects or {}
    actions = []
    for action in library.values():
        item: Dict[str, Any] = {ID: action.id}
        if action.display_name:
            item[NAME] = action.display_name
        if action.tactic_tag:
            item[TACTIC] = action.tactic_tag
        if action.reward is not None:
            item[REWARD] = action.reward
        if action.detectability is not None:
            item[DETECTABILITY] = action.detectability
        item[REQUIRES_ELEVATED] = action.requires_elevated
        item[LOCKED] = action.locked
        item[UNLOCKED_BY] = sorted(action.unlocked_by)
        item[PRE] = sorted(action.pre_conditions)
        item[POST] = sorted(action.post_conditions)
        if action.id in effects:
            item[EFFECT] = _render_effect(effects[action.id])
        actions.append(item)

    def requirement(r: Requirement) -> Dict[str, str]:
        result = {FACT: r.fact}
        if r.equals is not None:
            result[EQUALS] = r.equals
        if r.pattern is not None:
            result[PATTERN] = r.pattern
        return result

    return _dump(
        {
            ACTIONS: actions,
            AGENDAS: [
                {
                    ID: a.id,
                    REQUIRES: [requirement(r) for r in a.requirements],
                    STEPS: list(a.steps),
                    YIELDS_AGENT_ON: a.yields_agent_on,
                }
                for a in agendas
            ],
        }
    )


def render_environment(env: Environment) -> str:
    return _dump(
        {
            NAME: env.name,
            SCAN_RANGE: env.scan_range,
            ATTACKER: env.attacker_address,
            FOOTHOLD: env.foothold,
            KNOWN_FACTS: {k: list(v) for k, v in env.known_facts.items()},
            HOSTS: [
                {
                    ADDRESS: h.address,
                    HOSTNAME: h.hostname,
                    OS: h.os,
                    DOMAIN: h.domain,
                    SERVICES: [
                        {
                            PORT: s.port,
                            PROTOCOL: s.protocol,
                            VERSION: s.version,
                            WEAKNESSES: sorted(s.weaknesses),
                        }
                        for s in h.services
                    ],
                    CREDENTIALS: [
                        {PRINCIPAL: c.principal, SECRET: c.secret, SCOPE: c.scope}
                        for c in h.credentials
                    ],
                    FILES: [{PATH: f.path, TAG: f.tag} for f in h.files],
                }
                for h in env.hosts.values()
            ],
        }
    )


@dataclass
class ScenarioBundle:
    """Everything a run needs, with every cross-reference resolved."""

    planner_config: PlannerConfig
    library: Library
    environment: Environment
    effects: Dict[str, ActionEffect] = field(default_factory=dict)
    agendas: List[InitialAccessAgenda] = field(default_factory=list)

    def validate(self) -> None:
        validate_config(self.planner_config, self.library)

        for action_id in self.effects:
            if action_id not in self.library:
                raise ConfigValidationError(
                    f"an effect refers to an unknown action: {action_id}", key=EFFECT
                )
        for agenda in self.agendas:
            for action_id in agenda.steps:
                if action_id not in self.library:
                    raise ConfigValidationError(
                        f"agenda {agenda.id} refers to an unknown action: {action_id}",
                        key=f"{agenda.id}.{STEPS}",
                    )
        check_precompromise(self.environment, self.library, self.effects)

    @property
    def actions(self) -> List[Action]:
        return list(self.library.values())


def merge_libraries(
    parsed: Iterable[
        Tuple[Library, Mapping[str, ActionEffect], Sequence[InitialAccessAgenda]]
    ]
) -> Tuple[Library, Dict[str, ActionEffect], List[InitialAccessAgenda]]:
    """Merge several action libraries; an id defined twice is an error."""
    actions: List[Action] = []
    effects: Dict[str, ActionEffect] = {}
    agendas: List[InitialAccessAgenda] = []
    for library, lib_effects, lib_agendas in parsed:
        actions.extend(library.values())
        effects.update(lib_effects)
        for agenda in lib_agendas:
            if agenda.id in (a.id for a in agendas):
                raise ConfigValidationError(
                    f"duplicate agenda id: {agenda.id}", key=AGENDAS
                )
            agendas.append(agenda)
    return make_library(actions), effects, agendas


_ENVIRONMENT_KEYS = (SCAN_RANGE, FOOTHOLD, KNOWN_FACTS)
_LIBRARY_KEYS = (BUILTIN, EFFECT, STEPS, UNLOCKED_BY)


def _locate(
    exc: ConfigValidationError,
    config: _Document,
    libraries: Sequence[_Document],
    env: _Document,
) -> None:
    """Point a cross-reference error at the document (and line) it comes from.

    A key of the form 'owner.key' is searched within the mapping whose id is owner.
    """
    owner, _, key = (exc.key or "").rpartition(".")
    if key in _ENVIRONMENT_KEYS:
        docs: Sequence[_Document] = [env]
    elif key in _LIBRARY_KEYS:
        docs = libraries
    else:
        docs = [config]

    for doc in docs if key and key != BUILTIN else ():  # a missing builtin has no line
        line = doc.find(key, within=owner or None)
        if line is not None:
            exc.line, exc.source = line, doc.source
            return
    exc.source = exc.source or ", ".join(str(d.source) for d in docs)


def _read(path) -> Tuple[str, str]:
    try:
        return Path(path).read_text(encoding="utf-8"), str(path)
    except OSError as exc:
        raise ConfigValidationError(exc.strerror or str(exc), source=str(path))


def load_bundle(config_path, action_paths: Iterable, env_path) -> ScenarioBundle:
    """Load, merge and cross-validate the files of a scenario."""
    config_doc = _read(config_path)
    config = parse_planner_config(*config_doc)

    action_paths = list(action_paths)
    library_docs, parsed = [], []
    for path in action_paths:
        library_docs.append(_read(path))
        parsed.append(parse_action_library(*library_docs[-1]))
    if not parsed:
        raise ConfigValidationError("at least one action library is required")

    try:
        library, effects, agendas = merge_libraries(parsed)
    except ConfigValidationError as exc:
        exc.source = ", ".join(str(p) for p in action_paths)
        raise

    env_doc = _read(env_path)
    env = parse_environment(*env_doc)
    bundle = ScenarioBundle(config, library, env, effects, agendas)
    try:
        bundle.validate()
    except ConfigValidationError as exc:
        _locate(
            exc,
            _Document(*config_doc),
            [_Document(*d) for d in library_docs],
            _Document(*env_doc),
        )
        raise

    _LOGGER.debug(
        "Loaded %s: %s actions, %s agendas, %s hosts",
        config.name,
        len(library),
        len(agendas),
        len(bundle.environment.hosts),
    )
    return bundle
