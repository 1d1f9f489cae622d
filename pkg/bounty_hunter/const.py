#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - a reward-driven adversary emulation planner."""

import re

_dev_mode_ = False

FACT_NAME_REGEX = re.compile(r"^[A-Za-z0-9._-]+$")
ACTION_ID_REGEX = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")

# reward defaults, all overridable per planner config
DEFAULT_DISCOUNT = 0.4
DEFAULT_DEPTH = 3
DEFAULT_REWARD = 1
DEFAULT_GOAL_REWARD = 1000
DEFAULT_REWARD_UPDATE = 100  # the follower bump
DEFAULT_DETECTABILITY_WEIGHT = 0
DEFAULT_DETECTABILITY_FACTOR = 1

DEFAULT_STEP_LIMIT = 200
WEIGHT_FLOOR = 1e-6  # weighted selection, for zero/negative rewards

# telemetry scoring (alert level weights, log volume divisor, normaliser)
ALERT_WEIGHTS = {"high": 3, "medium": 2, "low": 1}
LOG_VOLUME_DIVISOR = 100
DETECTABILITY_MAX = 2.0
DETECTABILITY_SPAN = 1.5
DETECTABILITY_SCALE = 10
DETECTABILITY_CEILING = DETECTABILITY_MAX - 2 ** -52  # the largest float below 2.0

# step phases
PRECOMPROMISE = "precompromise"
POSTCOMPROMISE = "postcompromise"
ESCALATION = "escalation"
PHASES = (PRECOMPROMISE, POSTCOMPROMISE, ESCALATION)

# step results
SUCCESS = "success"
FAILURE = "failure"

# run outcomes, and their CLI exit codes
GOAL_ACHIEVED = "goal-achieved"
EXHAUSTED = "exhausted"
STEP_LIMIT = "step-limit"
ABORTED = "aborted"
EXIT_CODES = {GOAL_ACHIEVED: 0, EXHAUSTED: 2, STEP_LIMIT: 3, ABORTED: 4}
EXIT_INVALID = 1

# tactics reserved for the dedicated planning components
TACTIC_RECONNAISSANCE = "reconnaissance"
TACTIC_INITIAL_ACCESS = "initial-access"
TACTIC_PRIVILEGE_ESCALATION = "privilege-escalation"
RESERVED_TACTICS = (
    TACTIC_RECONNAISSANCE,
    TACTIC_INITIAL_ACCESS,
    TACTIC_PRIVILEGE_ESCALATION,
)

# host operating systems
OS_WORKSTATION = "windows-workstation"
OS_DOMAIN_CONTROLLER = "windows-server-dc"
OS_LINUX = "linux"
HOST_OS = (OS_WORKSTATION, OS_DOMAIN_CONTROLLER, OS_LINUX)

# credential scopes
SCOPE_LOCAL_USER = "local-user"
SCOPE_LOCAL_ADMIN = "local-admin"
SCOPE_DOMAIN_ADMIN = "domain-admin"
SCOPE_KRBTGT = "kerberos-service-account"
CREDENTIAL_SCOPES = (
    SCOPE_LOCAL_USER,
    SCOPE_LOCAL_ADMIN,
    SCOPE_DOMAIN_ADMIN,
    SCOPE_KRBTGT,
)

# agents
PRIV_USER = "user"
PRIV_ELEVATED = "elevated"
PRIVILEGES = (PRIV_USER, PRIV_ELEVATED)

ORIGIN_SEED = "attacker-seed"
ORIGIN_INITIAL_ACCESS = "initial-access"
ORIGIN_ESCALATION = "escalation"
ORIGIN_LATERAL = "lateral-movement"
AGENT_ORIGINS = (ORIGIN_SEED, ORIGIN_INITIAL_ACCESS, ORIGIN_ESCALATION, ORIGIN_LATERAL)

# effect: which agent may run it
AGENT_ANY = "any"
AGENT_ON_TARGET = "on-target"
AGENT_ELEVATED = "elevated-on-target"
AGENT_SEED = "attacker-seed"
REQUIRED_AGENTS = (AGENT_ANY, AGENT_ON_TARGET, AGENT_ELEVATED, AGENT_SEED)

# effect: whose host state the fact templates read
ON_AGENT = "agent"
ON_TARGET = "target"
ON_CONTROLLER = "controller"
ON_ATTACKER = "attacker"
EFFECT_HOSTS = (ON_AGENT, ON_TARGET, ON_CONTROLLER, ON_ATTACKER)

# effect: failure scripts
SCRIPT_SUCCESS = "success"
SCRIPT_ALWAYS_FAIL = "always-fail"
SCRIPT_FAIL_N_TIMES = "fail-n-times"
FAILURE_MODES = (SCRIPT_SUCCESS, SCRIPT_ALWAYS_FAIL, SCRIPT_FAIL_N_TIMES)

# effect: behaviour implemented by the pre-compromise component
BUILTIN_HOST_SCAN = "host-scan"
BUILTIN_PORT_SCAN = "port-scan"
BUILTINS = (BUILTIN_HOST_SCAN, BUILTIN_PORT_SCAN)

# fact names the pre-compromise component produces
FACT_HOST_IP = "host.ip"
FACT_SERVICE_PORT = "service.port"
FACT_SERVICE_PROTOCOL = "service.protocol"
FACT_SERVICE_VERSION = "service.version"

ORIGIN_ENVIRONMENT = "environment"
