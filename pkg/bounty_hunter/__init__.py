#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - a reward-driven adversary emulation planner.

Chains attack actions through their pre- and post-conditions towards a goal, and
executes them against a simulated target network, so that every decision can be
reproduced:
- deterministic: always the action with the best (adapted) future reward
- weighted random: seeded draws, weighted by the same rewards
"""

from concurrent.futures import ProcessPoolExecutor
import logging
from typing import Dict, Iterable, List, Optional

from .const import DEFAULT_STEP_LIMIT, _dev_mode_
from .planner import RunStatistics, assign_rewards, run_assessment, summarize_runs
from .rewards import RewardEngine
from .schema import ScenarioBundle, load_bundle
from .trace import (
    _TRACE_LOGGER as trace_logger,
    ExecutionTrace,
    close_trace_logging,
    log_trace,
    set_trace_logging,
)
from .version import __version__  # noqa: F401

DEV_MODE = _dev_mode_
VERSION = __version__

_LOGGER = logging.getLogger(__name__)
if DEV_MODE:
    _LOGGER.setLevel(logging.DEBUG)


def _run(bundle: ScenarioBundle, seed, step_limit, timing) -> ExecutionTrace:
    return run_assessment(
        bundle.planner_config,
        bundle.library,
        bundle.environment,
        effects=bundle.effects,
        agendas=bundle.agendas,
        seed=seed,
        step_limit=step_limit,
        timing=timing,
    )


class BountyHunter:
    """The planner class: one scenario, any number of runs."""

    def __init__(
        self,
        config_file=None,
        action_files: Iterable = (),
        env_file=None,
        bundle: Optional[ScenarioBundle] = None,
        **kwargs,
    ) -> None:
        """Initialise the class, from the scenario files or an already loaded bundle."""

        if kwargs.pop("debug_mode", None):
            _LOGGER.setLevel(logging.DEBUG)
        _LOGGER.debug("Starting bounty_hunter, **kwargs = %s", kwargs)

        self.bundle = bundle or load_bundle(config_file, list(action_files), env_file)
        self.step_limit = kwargs.pop("step_limit", None) or DEFAULT_STEP_LIMIT
        self.timing = kwargs.pop("timing", False)

        self._trace_file = kwargs.pop("trace_file", None)
        if self._trace_file:
            set_trace_logging(trace_logger, file_name=self._trace_file)

        self.traces: List[ExecutionTrace] = []

    def __repr__(self) -> str:
        return f"BountyHunter({self.bundle.planner_config.name!r})"

    def __str__(self) -> str:
        return self.bundle.planner_config.name

    def close(self) -> None:
        if self._trace_file:
            close_trace_logging(trace_logger)

    def run(self, seed: Optional[int] = None, run_id: int = 1) -> ExecutionTrace:
        """Run one assessment, and log its trace."""
        trace = _run(self.bundle, seed, self.step_limit, self.timing)
        self.traces.append(trace)
        log_trace(run_id, trace, trace_logger)
        return trace

    def repeat(
        self, runs: int, seed_base: int = 0, workers: int = 1
    ) -> List[ExecutionTrace]:
        """Run a batch of independent assessments, run i (from 0) with seed base + i.

        Traces are logged (and returned) in run order, whatever the order in which the
        runs complete.
        """
        if runs < 1:
            raise ValueError(f"runs must be >= 1, not {runs}")
        seeds = [seed_base + i for i in range(runs)]

        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                futures = [
                    executor.submit(
                        _run, self.bundle, seed, self.step_limit, self.timing
                    )
                    for seed in seeds
                ]
                traces = [f.result() for f in futures]
        else:
            traces = [
                _run(self.bundle, seed, self.step_limit, self.timing) for seed in seeds
            ]

        for run_id, trace in enumerate(traces, start=1):
            log_trace(run_id, trace, trace_logger)
        self.traces.extend(traces)
        return traces

    def statistics(
        self, traces: Optional[List[ExecutionTrace]] = None
    ) -> RunStatistics:
        return summarize_runs(self.traces if traces is None else traces)

    def rewards(self) -> Dict[str, Dict[str, float]]:
        """Return the starting base, future and adapted reward of every action."""
        config = self.bundle.planner_config
        engine = RewardEngine(
            assign_rewards(config, self.bundle.library), config.reward_params
        )
        return engine.table()

    @property
    def config(self) -> dict:
        config = self.bundle.planner_config
        return {
            "name": config.name,
            "goal_actions": list(config.goal_actions),
            "weighted_random": config.weighted_random,
            "seed": config.seed,
            "step_limit": self.step_limit,
        }

    @property
    def status(self) -> dict:
        return {
            "actions": len(self.bundle.library),
            "agendas": len(self.bundle.agendas),
            "hosts": len(self.bundle.environment.hosts),
            "runs": len(self.traces),
        }
