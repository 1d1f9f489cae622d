#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Test the bundled scenarios, end to end."""

from dataclasses import replace
import json
from pathlib import Path

import pytest

from bounty_hunter import BountyHunter
from bounty_hunter.const import (
    AGENT_ON_TARGET,
    ESCALATION,
    RESERVED_TACTICS,
    SCRIPT_ALWAYS_FAIL,
    FAILURE,
    GOAL_ACHIEVED,
    POSTCOMPROMISE,
    PRECOMPROMISE,
)
from bounty_hunter.environment import ActionEffect, FactTemplate
from bounty_hunter.model import make_library
from bounty_hunter.planner import run_assessment, summarize_runs
from bounty_hunter.schema import load_bundle
from bounty_hunter.trace import trace_lines

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
GOLDEN_TICKET = SCENARIOS / "golden-ticket"

GOLDEN_TICKET_RUN = [
    ("nmap-host-scan", PRECOMPROMISE, "success"),
    ("nmap-port-scan", PRECOMPROMISE, "success"),
    ("ssh-brute-force", PRECOMPROMISE, "success"),
    ("copy-and-start-agent", PRECOMPROMISE, "success"),
    ("collect-domain-info-powerview", POSTCOMPROMISE, "success"),
    ("find-credentials-local-scripts", POSTCOMPROMISE, "failure"),
    ("uac-bypass", ESCALATION, "success"),
    ("lsass-memory-dump", POSTCOMPROMISE, "success"),
    ("credential-dump-dc", POSTCOMPROMISE, "success"),
    ("forge-kerberos-golden-ticket", POSTCOMPROMISE, "success"),
]


def run(bundle, seed=None, **kwargs):
    return run_assessment(
        bundle.planner_config,
        bundle.library,
        bundle.environment,
        effects=bundle.effects,
        agendas=bundle.agendas,
        seed=seed,
        **kwargs,
    )


def test_golden_ticket(golden_ticket):
    trace = run(golden_ticket())

    assert trace.outcome == GOAL_ACHIEVED
    assert [(s.action_id, s.phase, s.result) for s in trace.steps] == GOLDEN_TICKET_RUN
    assert [s.index for s in trace.steps] == list(range(1, 11))

    rewards = {
        s.action_id: s.adapted_reward_at_selection
        for s in trace.steps
        if s.phase == POSTCOMPROMISE
    }
    assert rewards == {
        "collect-domain-info-powerview": pytest.approx(401),
        "find-credentials-local-scripts": pytest.approx(217.4),
        "lsass-memory-dump": pytest.approx(217.4),
        "credential-dump-dc": pytest.approx(641),
        "forge-kerberos-golden-ticket": pytest.approx(1200),
    }


def test_golden_ticket_without_the_follower_bump(golden_ticket):
    bundle = golden_ticket()
    bundle.planner_config = replace(bundle.planner_config, default_reward_update=0)
    trace = run(bundle)

    assert [(s.action_id, s.phase, s.result) for s in trace.steps] == GOLDEN_TICKET_RUN
    rewards = {
        s.action_id: s.adapted_reward_at_selection
        for s in trace.steps
        if s.phase == POSTCOMPROMISE
    }
    assert rewards == {
        "collect-domain-info-powerview": pytest.approx(401),
        "find-credentials-local-scripts": pytest.approx(161.4),
        "lsass-memory-dump": pytest.approx(161.4),
        "credential-dump-dc": pytest.approx(401),
        "forge-kerberos-golden-ticket": pytest.approx(1000),
    }


def test_golden_ticket_facts(golden_ticket):
    trace = run(golden_ticket())
    facts = {f.name: f.value for s in trace.steps for f in s.facts_produced}

    assert facts["dom.name"] == "corp.local"
    assert facts["dom.contr"] == "DC01"
    assert facts["admin.pwd"] == "Adm1n!2019"
    assert facts["krbtgt.ntlm"] == "9f1d5a53c8b0f4a1e2d6c7b8a9e0f1d2"
    assert facts["golden.ticket"]

    failed = [s for s in trace.steps if s.result == FAILURE]
    assert [s.facts_produced for s in failed] == [()]


def test_golden_ticket_is_deterministic(golden_ticket):
    bundle = golden_ticket()
    assert trace_lines(1, run(bundle)) == trace_lines(1, run(bundle))


@pytest.mark.parametrize(
    "config, first, powerview, lolbins",
    [
        ("exp2-w1", "collect-domain-info-powerview", 802, 509.27),
        ("exp2-w-1", "collect-domain-info-lolbins", 200.5, 315.74),
    ],
)
def test_detectability_flips_the_first_pick(
    golden_ticket, config, first, powerview, lolbins
):
    bundle = golden_ticket(config, lolbins=True)
    rewards = BountyHunter(bundle=bundle).rewards()

    assert rewards["collect-domain-info-powerview"]["future"] == pytest.approx(401)
    assert rewards["collect-domain-info-powerview"]["adapted"] == pytest.approx(
        powerview, abs=0.01
    )
    assert rewards["collect-domain-info-lolbins"]["adapted"] == pytest.approx(
        lolbins, abs=0.01
    )

    trace = run(bundle)
    assert trace.sequence[0] == first
    assert trace.outcome == GOAL_ACHIEVED


def shortest_path_length(bundle) -> int:
    """Return the fewest post-compromise actions that reach a goal (breadth first)."""
    def always_fails(action) -> bool:
        script = getattr(bundle.effects.get(action.id), "failure_script", None)
        return script is not None and script.mode == SCRIPT_ALWAYS_FAIL

    actions = [
        a
        for a in bundle.library.values()
        if a.tactic_tag not in RESERVED_TACTICS and not always_fails(a)
    ]
    goals = set(bundle.planner_config.goal_actions)

    frontier, seen = [frozenset()], {frozenset()}
    for length in range(1, len(actions) + 1):
        successors = []
        for known in frontier:
            for action in actions:
                if not action.pre_conditions <= known:
                    continue
                if action.id in goals:
                    return length
                state = known | action.post_conditions
                if state not in seen:
                    seen.add(state)
                    successors.append(state)
        frontier = successors
    raise AssertionError("no goal is reachable")


def test_shortest_attack_path(golden_ticket):
    assert shortest_path_length(golden_ticket()) == 4


@pytest.fixture(scope="module")
def variety():
    """Return the statistics of 200 weighted runs, for each goal reward."""
    libraries = [
        SCENARIOS / "common" / "precompromise.actions.yml",
        GOLDEN_TICKET / "golden-ticket.actions.yml",
    ]
    stats = {}
    for name in ("exp3-e1k", "exp3-e10k"):
        bundle = load_bundle(
            GOLDEN_TICKET / f"{name}.planner.yml",
            libraries,
            GOLDEN_TICKET / "ad-lab.env.yml",
        )
        hunter = BountyHunter(bundle=bundle)
        stats[name] = summarize_runs(hunter.repeat(200))
    return stats


def test_variety_of_attack_paths(variety):
    e1k, e10k = variety["exp3-e1k"], variety["exp3-e10k"]

    assert e1k.goal_rate == e10k.goal_rate == 1.0
    assert min(e1k.min_length, e10k.min_length) == 4
    assert e1k.unique_sequences >= 10
    assert e10k.mean_length < e1k.mean_length


def test_weighted_run_is_reproducible(golden_ticket):
    bundle = golden_ticket("exp3-e1k")
    first, second = run(bundle, seed=42), run(bundle, seed=42)

    assert first.seed_used == 42
    assert trace_lines(1, first) == trace_lines(1, second)


def test_example_a(bundle_of):
    trace = run(bundle_of("example-a"))

    assert trace.outcome == GOAL_ACHIEVED
    assert trace.sequence == (
        "find-sensitive-directory",
        "compress-sensitive-directory",
        "exfiltrate-sensitive-directory",
    )
    assert [s.adapted_reward_at_selection for s in trace.steps] == pytest.approx(
        [161.4, 501, 1100]
    )


def test_example_b(bundle_of):
    trace = run(bundle_of("example-b"))

    assert trace.outcome == GOAL_ACHIEVED
    assert trace.sequence == (
        "create-staging-directory",
        "find-and-stage-sensitive-files",
        "compress-staging-directory",
        "exfiltrate-staging-directory",
    )


def test_fin6(bundle_of):
    trace = run(bundle_of("fin6"))

    assert trace.outcome == GOAL_ACHIEVED
    assert trace.sequence == (
        "adfind-domain-discovery",
        "compress-with-7zip",
        "exfiltrate-with-plink",
    )
    assert trace.steps[0].adapted_reward_at_selection == pytest.approx(161.4)
    assert "system-owner-discovery" not in trace.sequence


def test_apt29(bundle_of):
    trace = run(bundle_of("apt29"))

    assert trace.outcome == GOAL_ACHIEVED
    assert trace.sequence == (
        "discover-remote-hostnames",
        "enumerate-sessions",
        "enumerate-sessions",
        "transfer-sysinternals-webdav",
        "psexec-lateral-movement",
    )
    enumerated = [
        s.binding["remote.host"]
        for s in trace.steps
        if s.action_id == "enumerate-sessions"
    ]
    assert enumerated == ["10.2.0.22", "10.2.0.30"]
    assert trace.steps[-1].binding["remote.host"] == "10.2.0.22"


def test_apt29_continues_on_the_new_agent(bundle_of, action):
    bundle = bundle_of("apt29")
    psexec = bundle.library["psexec-lateral-movement"]
    library = make_library(
        [
            *(a for a in bundle.library.values() if a.id != psexec.id),
            replace(psexec, post_conditions=frozenset({"lateral.host"})),
            action("collect-hostname", pre={"lateral.host"}, post={"host.name"}),
        ]
    )
    effects = {
        **bundle.effects,
        psexec.id: replace(
            bundle.effects[psexec.id],
            produces=(FactTemplate("lateral.host", source="host.address"),),
        ),
        "collect-hostname": ActionEffect(
            "collect-hostname",
            required_agent=AGENT_ON_TARGET,
            produces=(FactTemplate("host.name", source="host.hostname"),),
        ),
    }
    config = replace(bundle.planner_config, goal_actions=("collect-hostname",))
    trace = run_assessment(config, library, bundle.environment, effects)

    assert trace.outcome == GOAL_ACHIEVED
    moved, collected = trace.steps[-2], trace.steps[-1]
    assert moved.action_id == psexec.id
    assert moved.facts_produced[0].value == "10.2.0.22"
    assert collected.action_id == "collect-hostname"
    assert collected.agent_id != moved.agent_id
    assert [f.value for f in collected.facts_produced] == ["WS22"]


@pytest.mark.parametrize(
    "env, exploit, attacker",
    [
        ("ftp.env.yml", "vsftpd-backdoor-exploit", "192.168.56.5"),
        ("irc.env.yml", "unrealircd-backdoor-exploit", "192.168.57.5"),
    ],
)
def test_linux(bundle_of, env, exploit, attacker):
    trace = run(bundle_of("linux", env=env, common=True))

    assert trace.outcome == GOAL_ACHIEVED
    assert exploit in [s.action_id for s in trace.steps if s.phase == PRECOMPROMISE]
    assert trace.sequence == ("read-shadow-file", "exfiltrate-shadow-file")
    assert not [s for s in trace.steps if s.phase == ESCALATION]  # root already
    assert [f.value for f in trace.steps[-1].facts_produced] == [attacker]


def test_hunter(golden_ticket, tmp_path):
    trace_file = tmp_path / "trace.jsonl"
    hunter = BountyHunter(bundle=golden_ticket("exp3-e1k"), trace_file=trace_file)

    traces = hunter.repeat(4, seed_base=10, workers=2)
    hunter.close()

    assert [t.seed_used for t in traces] == [10, 11, 12, 13]
    assert traces == [run(golden_ticket("exp3-e1k"), seed=s) for s in range(10, 14)]

    headers = [
        json.loads(line)
        for line in trace_file.read_text().splitlines()
        if "sequence_length" in line
    ]
    assert [h["run_id"] for h in headers] == [1, 2, 3, 4]
    assert [h["seed_used"] for h in headers] == [10, 11, 12, 13]

    assert hunter.status == {"actions": 18, "agendas": 3, "hosts": 4, "runs": 4}
    assert hunter.config["weighted_random"] is True
    assert hunter.config["step_limit"] == 200
    assert str(hunter) == "Experiment 3 - E1k"


def test_hunter_run(golden_ticket):
    hunter = BountyHunter(bundle=golden_ticket(), step_limit=2)
    trace = hunter.run()

    assert trace.outcome == "step-limit"
    assert hunter.statistics().runs == 1
