#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""A CLI for the bounty_hunter library.

    bounty_hunter plans (and simulates) adversary emulation campaigns.
    """

import json
import logging

import click
from colorama import init as colorama_init, Fore, Style

from bounty_hunter import BountyHunter
from bounty_hunter.const import (
    ESCALATION,
    EXIT_CODES,
    EXIT_INVALID,
    FAILURE,
    PRECOMPROMISE,
)
from bounty_hunter.exceptions import BountyHunterError
from bounty_hunter.helpers import binding_str, round_half_up
from bounty_hunter.rewards import detectability_from_telemetry
from bounty_hunter.trace import ExecutionTrace, set_logging

DEBUG_MODE = "debug_mode"

COLORS = {PRECOMPROMISE: Fore.CYAN, ESCALATION: Fore.MAGENTA, FAILURE: Fore.RED}

CONTEXT_SETTINGS = dict(help_option_names=["-h", "--help"])


class ScenarioCommand(click.Command):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.params[:0] = [
            click.Option(
                ("-c", "--config"),
                type=click.Path(exists=True, dir_okay=False),
                required=True,
                help="planner config (*.planner.yml)",
            ),
            click.Option(
                ("-a", "--actions"),
                type=click.Path(exists=True, dir_okay=False),
                multiple=True,
                required=True,
                help="action library (*.actions.yml), may be repeated",
            ),
            click.Option(
                ("-e", "--env"),
                type=click.Path(exists=True, dir_okay=False),
                required=True,
                help="environment (*.env.yml)",
            ),
            click.Option(
                ("-o", "--trace"), type=click.Path(), help="write the JSONL trace here"
            ),
            click.Option(("--step-limit",), type=click.IntRange(min=1)),
            click.Option(("-q", "--quiet"), is_flag=True, help="don't print the steps"),
        ]


@click.group(context_settings=CONTEXT_SETTINGS)
@click.option("-z", "--debug-mode", count=True, help="enable debug logging")
@click.pass_context
def cli(ctx, **kwargs):
    """A CLI for the bounty_hunter library."""

    level = logging.DEBUG if kwargs[DEBUG_MODE] else logging.WARNING
    set_logging(level, cc_stdout=kwargs[DEBUG_MODE] > 1)
    ctx.obj = kwargs


def _planner(obj, kwargs, **extra) -> BountyHunter:
    return BountyHunter(
        kwargs["config"],
        kwargs["actions"],
        kwargs["env"],
        debug_mode=obj[DEBUG_MODE] > 0,
        step_limit=kwargs["step_limit"],
        trace_file=kwargs["trace"],
        **extra,
    )


def _fail(ctx, err: BountyHunterError) -> None:
    click.echo(f"Error: {err}", err=True)
    ctx.exit(EXIT_INVALID)


def print_trace(trace: ExecutionTrace) -> None:
    for step in trace.steps:
        color = COLORS.get(FAILURE if step.result == FAILURE else step.phase, "")
        reward = round_half_up(step.adapted_reward_at_selection)
        print(
            f"{color}{step.index:>3} {step.phase:<14} {step.action_id:<36} "
            f"{step.agent_id:<8} {step.result:<7} "
            f"{'' if reward is None else reward:>10} {binding_str(step.binding)}"
            f"{Style.RESET_ALL}"
        )

    sequence = " > ".join(trace.sequence)
    print(f"{Style.BRIGHT}{trace.outcome}: {sequence}{Style.RESET_ALL}")
    if trace.diagnostic:
        print(f"{Fore.YELLOW}{trace.diagnostic}{Style.RESET_ALL}")


@click.command(cls=ScenarioCommand)
@click.option("-s", "--seed", type=click.IntRange(min=0), help="overrides the config")
@click.option("--timing", is_flag=True, help="add the planning time to the trace")
@click.pass_context
def run(ctx, **kwargs):
    """Run a single assessment."""
    try:
        planner = _planner(ctx.obj, kwargs, timing=kwargs["timing"])
    except BountyHunterError as err:
        _fail(ctx, err)
        return
    try:
        trace = planner.run(seed=kwargs["seed"])
    except BountyHunterError as err:
        _fail(ctx, err)
        return
    finally:
        planner.close()

    if not kwargs["quiet"]:
        print_trace(trace)
    ctx.exit(EXIT_CODES[trace.outcome])


@click.command(cls=ScenarioCommand)
@click.option("-n", "--runs", type=click.IntRange(min=1), required=True)
@click.option("-s", "--seed-base", type=click.IntRange(min=0), default=0)
@click.option("-w", "--workers", type=click.IntRange(min=1), default=1)
@click.option("--json", "as_json", is_flag=True, help="print the statistics as JSON")
@click.pass_context
def repeat(ctx, **kwargs):
    """Repeat an assessment, run i with seed base + i, and print the statistics."""
    try:
        planner = _planner(ctx.obj, kwargs)
    except BountyHunterError as err:
        _fail(ctx, err)
        return
    try:
        traces = planner.repeat(
            kwargs["runs"], seed_base=kwargs["seed_base"], workers=kwargs["workers"]
        )
    except BountyHunterError as err:
        _fail(ctx, err)
        return
    finally:
        planner.close()

    stats = planner.statistics(traces).as_dict()
    if kwargs["as_json"]:
        print(json.dumps(stats))
        return

    outcomes = stats.pop("outcomes")
    for key, value in stats.items():
        print(f"{key:<18} {round(value, 4) if isinstance(value, float) else value}")
    for outcome, count in sorted(outcomes.items()):
        print(f"{'outcome ' + outcome:<18} {count}")


@click.command(context_settings=CONTEXT_SETTINGS)
@click.option("--high", type=int, default=0, help="number of high level alerts")
@click.option("--medium", type=int, default=0, help="number of medium level alerts")
@click.option("--low", type=int, default=0, help="number of low level alerts")
@click.option("--log-volume", type=int, default=0, help="number of log entries")
@click.pass_context
def score(ctx, high, medium, low, log_volume):
    """Print the detectability factor of an action, from its telemetry."""
    try:
        value = detectability_from_telemetry(high, medium, low, log_volume)
    except ValueError as err:
        click.echo(f"Error: {err}", err=True)
        ctx.exit(EXIT_INVALID)
        return
    print(f"{value:.4f}")


cli.add_command(run)
cli.add_command(repeat)
cli.add_command(score)

if __name__ == "__main__":
    colorama_init(autoreset=True)
    cli()
