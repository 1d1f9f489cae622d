#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Shared fixtures: the bundled scenarios, and small in-memory libraries."""

from pathlib import Path

import pytest

from bounty_hunter.environment import Credential, Environment, Host, Service
from bounty_hunter.model import Action, make_library
from bounty_hunter.planner import PlannerConfig
from bounty_hunter.schema import load_bundle

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

PRECOMPROMISE_LIB = SCENARIOS / "common" / "precompromise.actions.yml"
GOLDEN_TICKET = SCENARIOS / "golden-ticket"
GOLDEN_TICKET_LIB = GOLDEN_TICKET / "golden-ticket.actions.yml"
LOLBINS_LIB = GOLDEN_TICKET / "lolbins.actions.yml"
AD_LAB_ENV = GOLDEN_TICKET / "ad-lab.env.yml"


def scenario_files(name: str):
    """Return (config, [libraries], env) of a bundled scenario."""
    folder = SCENARIOS / name
    return (
        folder / f"{name}.planner.yml",
        sorted(folder.glob("*.actions.yml")),
        sorted(folder.glob("*.env.yml"))[0],
    )


@pytest.fixture
def scenarios_dir() -> Path:
    return SCENARIOS


@pytest.fixture
def golden_ticket():
    """Return a loader of the Golden Ticket bundle, for one of its planner configs."""

    def load(config: str = "exp1", lolbins: bool = False):
        libraries = [PRECOMPROMISE_LIB, GOLDEN_TICKET_LIB]
        if lolbins:
            libraries.append(LOLBINS_LIB)
        config_path = GOLDEN_TICKET / f"{config}.planner.yml"
        return load_bundle(config_path, libraries, AD_LAB_ENV)

    return load


@pytest.fixture
def bundle_of():
    """Return a loader of the single-folder scenarios (example-a, fin6, ...)."""

    def load(name: str, config=None, env=None, common: bool = False):
        folder = SCENARIOS / name
        config_path, libraries, env_path = scenario_files(name)
        if config:
            config_path = folder / config
        if env:
            env_path = folder / env
        if common:
            libraries = [PRECOMPROMISE_LIB, *libraries]
        return load_bundle(config_path, libraries, env_path)

    return load


@pytest.fixture
def action():
    """Return an Action factory with terse condition arguments."""

    def make(action_id, pre=(), post=(), **kwargs) -> Action:
        return Action(action_id, pre_conditions=pre, post_conditions=post, **kwargs)

    return make


@pytest.fixture
def example_a(action):
    """The three-action library of the find/compress/exfiltrate example."""
    return make_library(
        [
            action("find-sensitive-directory", post={"dir.path"}),
            action(
                "compress-sensitive-directory",
                pre={"dir.path"},
                post={"archive.path"},
            ),
            action("exfiltrate-sensitive-directory", pre={"archive.path"}),
        ]
    )


@pytest.fixture
def example_a_config():
    return PlannerConfig(
        "Example A", goal_actions=("exfiltrate-sensitive-directory",)
    )


@pytest.fixture
def workstation_env():
    """An attacker, plus one domain workstation with a foothold on it."""
    return Environment(
        [
            Host("10.9.0.5", "attacker", "linux"),
            Host(
                "10.9.0.20",
                "WS20",
                "windows-workstation",
                services=(Service(445, "smb"),),
                credentials=(Credential("carol", "Autumn2022", "local-user"),),
                domain="lab.local",
            ),
        ],
        attacker="10.9.0.5",
        foothold="10.9.0.20",
        name="workstation",
    )


@pytest.fixture
def example_b(action):
    """The staging example: compress stays locked until files are staged."""
    return make_library(
        [
            action("create-staging-directory", post={"staging.dir"}),
            action(
                "find-and-stage-sensitive-files",
                pre={"staging.dir"},
                post={"staged.files"},
            ),
            action(
                "compress-staging-directory",
                pre={"staging.dir"},
                post={"archive.path"},
                locked=True,
                unlocked_by={"find-and-stage-sensitive-files"},
            ),
            action("exfiltrate-staging-directory", pre={"archive.path"}, reward=1000),
        ]
    )
