#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - execution traces, and their JSONL logs.

A trace file has one header line per run, followed by one line per step; every line
is a single-line JSON object. Lines are written through a dedicated logger, so that
the console and the trace file can be configured independently.
"""

from dataclasses import dataclass, field
import json
import logging
import sys
from typing import Any, Dict, List, Mapping, Optional, Tuple

try:
    import colorlog

    _use_color_ = True
except ModuleNotFoundError:
    _use_color_ = False

from .const import (
    FAILURE,
    GOAL_ACHIEVED,
    PHASES,
    POSTCOMPROMISE,
    SUCCESS,
    _dev_mode_,
)
from .helpers import round_half_up
from .model import Fact

DEV_MODE = _dev_mode_

DEFAULT_FMT = "%(asctime)s.%(msecs)03d %(levelname)-8s %(name)s: %(message)s"
DEFAULT_DATEFMT = "%H:%M:%S"
CONSOLE_FMT = "%(levelname)-8s %(message)s"
TRACE_LOG_FMT = "%(message)s"

LOG_COLOURS = {
    "DEBUG": "white",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "bold_red",
    "CRITICAL": "bold_red",
}  # default_log_colors

_TRACE_LOGGER = logging.getLogger(f"{__package__}.trace_log")  # don't setLevel here

_LOGGER = logging.getLogger(__name__)
if DEV_MODE:
    _LOGGER.setLevel(logging.DEBUG)


@dataclass(frozen=True)
class StepRecord:
    """One executed step of a run."""

    index: int
    action_id: str
    agent_id: str
    binding: Mapping[str, str]
    adapted_reward_at_selection: Optional[float]
    result: str
    facts_produced: Tuple[Fact, ...] = ()
    phase: str = POSTCOMPROMISE

    def __post_init__(self) -> None:
        object.__setattr__(self, "binding", dict(self.binding))
        object.__setattr__(self, "facts_produced", tuple(self.facts_produced))
        if self.phase not in PHASES:
            raise ValueError(f"step {self.index} has an unknown phase: {self.phase}")
        if self.result == FAILURE and self.facts_produced:
            raise ValueError(f"step {self.index} failed, but produced facts")

    @property
    def succeeded(self) -> bool:
        return self.result == SUCCESS


@dataclass
class ExecutionTrace:
    """The ordered steps of one run, and how it ended."""

    steps: List[StepRecord] = field(default_factory=list)
    seed_used: Optional[int] = None
    outcome: Optional[str] = None
    config_name: str = ""
    diagnostic: Optional[str] = None
    planning_seconds: Optional[float] = None  # excluded from determinism checks

    @property
    def sequence(self) -> Tuple[str, ...]:
        """Return the action ids of the post-compromise steps."""
        return tuple(s.action_id for s in self.steps if s.phase == POSTCOMPROMISE)

    @property
    def goal_achieved(self) -> bool:
        return self.outcome == GOAL_ACHIEVED


class StdErrFilter(logging.Filter):
    """For sys.stderr, process only warnings (and worse)."""

    def filter(self, record) -> bool:
        return record.levelno >= logging.WARNING


class StdOutFilter(logging.Filter):
    """For sys.stdout, process only the rest."""

    def filter(self, record) -> bool:
        return record.levelno < logging.WARNING


class FileFilter(logging.Filter):
    """For trace files, process only trace lines."""

    def filter(self, record) -> bool:
        return record.levelno == logging.INFO


def _console_formatter() -> logging.Formatter:
    if _use_color_:
        return colorlog.ColoredFormatter(
            f"%(log_color)s{CONSOLE_FMT}", reset=True, log_colors=LOG_COLOURS
        )
    return logging.Formatter(fmt=CONSOLE_FMT)


def set_logging(level=logging.WARNING, cc_stdout=False) -> None:
    """Create/configure the console handlers of the package logger."""
    logger = logging.getLogger(__package__)
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    handler = logging.StreamHandler(stream=sys.stderr)
    handler.setFormatter(_console_formatter())
    handler.setLevel(logging.WARNING)
    handler.addFilter(StdErrFilter())
    logger.addHandler(handler)

    if cc_stdout:
        handler = logging.StreamHandler(stream=sys.stdout)
        handler.setFormatter(_console_formatter())
        handler.setLevel(logging.DEBUG)
        handler.addFilter(StdOutFilter())
        logger.addHandler(handler)


def set_trace_logging(logger=_TRACE_LOGGER, file_name=None) -> None:
    """Create/configure the trace file handler; any previous handlers are closed."""
    logger.propagate = False
    logger.setLevel(logging.INFO)

    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)

    if file_name:
        handler = logging.FileHandler(file_name, mode="w", encoding="utf-8")
        handler.setFormatter(logging.Formatter(fmt=TRACE_LOG_FMT))
        handler.setLevel(logging.INFO)
        handler.addFilter(FileFilter())
        logger.addHandler(handler)


def close_trace_logging(logger=_TRACE_LOGGER) -> None:
    set_trace_logging(logger, file_name=None)


def header_record(run_id: int, trace: ExecutionTrace) -> Dict[str, Any]:
    record = {
        "run_id": run_id,
        "seed_used": trace.seed_used,
        "config_name": trace.config_name,
        "outcome": trace.outcome,
        "sequence_length": len(trace.sequence),
    }
    if trace.diagnostic:
        record["diagnostic"] = trace.diagnostic
    if trace.planning_seconds is not None:
        record["planning_seconds"] = trace.planning_seconds
    return record


def step_record(run_id: int, step: StepRecord) -> Dict[str, Any]:
    return {
        "run_id": run_id,
        "index": step.index,
        "phase": step.phase,
        "action_id": step.action_id,
        "agent_id": step.agent_id,
        "binding": step.binding,
        "reward_exact": step.adapted_reward_at_selection,
        "reward_display": round_half_up(step.adapted_reward_at_selection),
        "result": step.result,
        "facts_produced": [
            {"name": f.name, "value": f.value} for f in step.facts_produced
        ],
    }


def trace_lines(run_id: int, trace: ExecutionTrace) -> List[str]:
    """Return the JSONL lines of one run: the header, then its steps."""
    records = [header_record(run_id, trace)]
    records += [step_record(run_id, s) for s in trace.steps]
    return [json.dumps(r, separators=(", ", ": ")) for r in records]


def log_trace(run_id: int, trace: ExecutionTrace, logger=_TRACE_LOGGER) -> None:
    for line in trace_lines(run_id, trace):
        logger.info(line)
