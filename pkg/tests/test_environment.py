#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Test the simulated target network."""

import pytest

from bounty_hunter.const import (
    ORIGIN_ESCALATION,
    ORIGIN_INITIAL_ACCESS,
    ORIGIN_LATERAL,
    ORIGIN_SEED,
    PRIV_ELEVATED,
    PRIV_USER,
)
from bounty_hunter.environment import (
    ActionEffect,
    Credential,
    Environment,
    FactTemplate,
    FailureScript,
    FileEntry,
    Host,
    Service,
    execute,
    is_valid_source,
    spawn_agent,
)
from bounty_hunter.exceptions import (
    CoherenceError,
    ConfigValidationError,
    ContractViolationError,
    UnknownHostError,
)


@pytest.fixture
def ad_lab(golden_ticket):
    return golden_ticket().environment.copy()


@pytest.fixture
def on_ws01(ad_lab):
    ws01 = ad_lab.host("10.0.0.11")
    return spawn_agent(ad_lab, ws01, PRIV_USER, ORIGIN_INITIAL_ACCESS)


def test_seed_agent(ad_lab):
    seed = ad_lab.seed_agent
    assert seed.host_address == "10.0.0.5"
    assert seed.origin == ORIGIN_SEED
    assert list(ad_lab.agents) == [seed.id]


def test_collect_domain_info(golden_ticket, ad_lab, on_ws01):
    bundle = golden_ticket()
    action = bundle.library["collect-domain-info-powerview"]
    outcome = execute(action, {}, on_ws01, ad_lab, bundle.effects[action.id], "5:x")

    assert outcome.success
    assert {(f.name, f.value) for f in outcome.facts} == {
        ("dom.name", "corp.local"),
        ("dom.contr", "DC01"),
    }
    assert {f.origin for f in outcome.facts} == {"5:x"}


def test_scripted_failure(golden_ticket, ad_lab, on_ws01):
    bundle = golden_ticket()
    action = bundle.library["find-credentials-local-scripts"]
    outcome = execute(action, {}, on_ws01, ad_lab, bundle.effects[action.id])

    assert not outcome.success
    assert outcome.facts == ()


def test_fail_n_times(action, workstation_env):
    ping = action("ping", post={"ping.result"})
    effect = ActionEffect(
        "ping",
        produces=(FactTemplate("ping.result", source="host.os"),),
        failure_script=FailureScript("fail-n-times", 2),
    )
    agent = spawn_agent(
        workstation_env,
        workstation_env.host("10.9.0.20"),
        PRIV_USER,
        ORIGIN_INITIAL_ACCESS,
    )

    results = [
        execute(ping, {}, agent, workstation_env, effect).success for _ in range(3)
    ]
    assert results == [False, False, True]
    assert workstation_env.executions("ping") == 3


def test_forge_golden_ticket_token(golden_ticket, ad_lab, on_ws01):
    bundle = golden_ticket()
    action = bundle.library["forge-kerberos-golden-ticket"]
    binding = {"dom.name": "corp.local", "krbtgt.sid": "S-1", "krbtgt.ntlm": "abc"}

    first = execute(action, binding, on_ws01, ad_lab, bundle.effects[action.id])
    again = execute(action, binding, on_ws01, ad_lab, bundle.effects[action.id])

    assert first.success
    assert [f.name for f in first.facts] == ["golden.ticket"]
    assert first.facts == again.facts


def test_credential_dump_reads_the_controller(golden_ticket, ad_lab, on_ws01):
    bundle = golden_ticket()
    action = bundle.library["credential-dump-dc"]
    binding = {"admin.pwd": "Adm1n!2019", "dom.contr": "DC01"}
    outcome = execute(action, binding, on_ws01, ad_lab, bundle.effects[action.id])

    assert dict((f.name, f.value) for f in outcome.facts) == {
        "krbtgt.sid": "S-1-5-21-3623811015-3361044348-30300820",
        "krbtgt.ntlm": "9f1d5a53c8b0f4a1e2d6c7b8a9e0f1d2",
    }


def test_default_effect(action, workstation_env):
    agent = spawn_agent(
        workstation_env, workstation_env.host("10.9.0.20"), PRIV_USER, "initial-access"
    )
    outcome = execute(action("find", post={"dir.path"}), {}, agent, workstation_env)

    assert outcome.success
    assert [f.name for f in outcome.facts] == ["dir.path"]


def test_coherence(golden_ticket, ad_lab, on_ws01):
    bundle = golden_ticket()

    lsass = bundle.library["lsass-memory-dump"]
    with pytest.raises(CoherenceError):
        execute(lsass, {}, on_ws01, ad_lab, bundle.effects[lsass.id])

    collect = bundle.library["collect-domain-info-powerview"]
    with pytest.raises(CoherenceError):
        execute(collect, {}, ad_lab.seed_agent, ad_lab, bundle.effects[collect.id])

    brute_force = bundle.library["ssh-brute-force"]
    binding = {"host.ip": "10.0.0.11"}
    with pytest.raises(CoherenceError):
        execute(brute_force, binding, on_ws01, ad_lab, bundle.effects[brute_force.id])


def test_coherence_errors_are_contract_violations():
    assert issubclass(CoherenceError, ContractViolationError)


def test_builtins_are_not_executed(golden_ticket, ad_lab):
    bundle = golden_ticket()
    scan = bundle.library["nmap-host-scan"]

    with pytest.raises(ContractViolationError):
        execute(scan, {}, ad_lab.seed_agent, ad_lab, bundle.effects[scan.id])


def test_spawn_agent(ad_lab, on_ws01):
    ws01 = ad_lab.host("10.0.0.11")
    elevated = spawn_agent(ad_lab, ws01, PRIV_ELEVATED, ORIGIN_ESCALATION)

    assert on_ws01.host_address == "10.0.0.11" and not on_ws01.is_elevated
    assert elevated.is_elevated and elevated.id != on_ws01.id
    assert spawn_agent(ad_lab, ws01, PRIV_ELEVATED, ORIGIN_ESCALATION) == elevated
    assert ad_lab.elevated_agent_on("10.0.0.11") == elevated

    with pytest.raises(UnknownHostError):
        spawn_agent(ad_lab, Host("10.0.0.99", "ghost", "linux"), PRIV_USER, "")
    with pytest.raises(ValueError):
        spawn_agent(ad_lab, ws01, PRIV_USER, "phishing")
    with pytest.raises(ValueError):
        spawn_agent(ad_lab, ws01, "root", ORIGIN_ESCALATION)
    assert len(ad_lab.agents_on("10.0.0.11")) == 2


def test_lateral_movement_origin(bundle_of):
    bundle = bundle_of("apt29")
    env = bundle.environment.copy()
    agent = spawn_agent(env, env.host("10.2.0.21"), PRIV_USER, ORIGIN_INITIAL_ACCESS)
    psexec = bundle.library["psexec-lateral-movement"]
    binding = {"remote.host": "10.2.0.22", "session.id": "1", "tool.path": "C:\\x"}

    outcome = execute(psexec, binding, agent, env, bundle.effects[psexec.id])
    assert outcome.agent.host_address == "10.2.0.22"
    assert outcome.agent.origin == ORIGIN_LATERAL


def test_requires_weakness(golden_ticket, ad_lab):
    bundle = golden_ticket()
    brute_force = bundle.library["ssh-brute-force"]
    effect = bundle.effects[brute_force.id]
    seed = ad_lab.seed_agent

    failed = execute(brute_force, {"host.ip": "10.0.0.12"}, seed, ad_lab, effect)
    assert not failed.success
    outcome = execute(brute_force, {"host.ip": "10.0.0.11"}, seed, ad_lab, effect)
    assert {(f.name, f.value) for f in outcome.facts} == {
        ("ssh.user", "alice"),
        ("ssh.pwd", "Summer2021"),
    }


def test_creates_file(bundle_of):
    bundle = bundle_of("fin6")
    env = bundle.environment.copy()
    agent = spawn_agent(env, env.host("10.1.0.21"), PRIV_USER, ORIGIN_INITIAL_ACCESS)
    adfind = bundle.library["adfind-domain-discovery"]

    execute(adfind, {}, agent, env, bundle.effects[adfind.id])
    assert FileEntry("C:\\ProgramData\\ad_users.txt", "adfind") in env.host(
        "10.1.0.21"
    ).files
    assert FileEntry("C:\\ProgramData\\ad_users.txt", "adfind") not in (
        bundle.environment.host("10.1.0.21").files
    )


def test_environment_determinism(golden_ticket):
    bundle = golden_ticket()
    discovery = [
        a
        for a in bundle.library.values()
        if a.tactic_tag == "discovery" and not a.pre_conditions
    ]

    def play():
        env = bundle.environment.copy()
        agent = spawn_agent(env, env.host("10.0.0.11"), PRIV_USER, "initial-access")
        return [execute(a, {}, agent, env, bundle.effects.get(a.id)) for a in discovery]

    assert play() == play()


def test_sources():
    assert is_valid_source("token")
    assert is_valid_source("credential.domain-admin.secret")
    assert is_valid_source("file.shadow.path")
    assert not is_valid_source("credential.domain-admin.hash")
    assert not is_valid_source("host")


def test_environment_validation():
    attacker = Host("10.0.0.5", "attacker", "linux")
    dc = Host("10.0.0.10", "DC01", "windows-server-dc", domain="corp.local")

    with pytest.raises(ConfigValidationError):
        Environment([dc], attacker="10.0.0.5")
    with pytest.raises(ConfigValidationError):
        Environment([attacker, attacker], attacker="10.0.0.5")
    with pytest.raises(ConfigValidationError):
        Environment(
            [
                attacker,
                dc,
                Host("10.0.0.11", "DC02", "windows-server-dc", domain="corp.local"),
            ],
            attacker="10.0.0.5",
        )
    with pytest.raises(ConfigValidationError):
        Environment(
            [
                attacker,
                Host(
                    "10.0.0.11",
                    "WS01",
                    "windows-workstation",
                    credentials=(
                        Credential("krbtgt", "x", "kerberos-service-account"),
                    ),
                ),
            ],
            attacker="10.0.0.5",
        )
    with pytest.raises(ConfigValidationError):
        Environment(
            [
                attacker,
                Host(
                    "10.0.0.11",
                    "WS01",
                    "linux",
                    services=(Service(22, "ssh"), Service(22, "ssh", "OpenSSH")),
                ),
            ],
            attacker="10.0.0.5",
        )
    with pytest.raises(ConfigValidationError):
        Environment([attacker], attacker="10.0.0.5", foothold="10.0.0.5")
    with pytest.raises(ConfigValidationError):
        Environment([attacker], attacker="10.0.0.5", known_facts={"dom.name": [""]})
    with pytest.raises(ConfigValidationError):
        Service(0, "ssh")
