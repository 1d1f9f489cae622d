#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - exceptions."""

from typing import Optional


class BountyHunterError(Exception):
    """Base class for exceptions in this module."""

    pass


class _HintedError(BountyHunterError):
    """Base class for exceptions that render a message with a hint."""

    ERR_MSG = "An error occurred"
    ERR_TIP = "(no hint)"

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.message = args[0] if args else None

    def __str__(self) -> str:
        if self.message:
            return f"{self.ERR_MSG}: {self.message} {self.ERR_TIP}"
        return f"{self.ERR_MSG} {self.ERR_TIP}"


class ConfigValidationError(_HintedError):
    """Raised when a scenario file (or a cross-reference between them) is invalid."""

    ERR_MSG = "The scenario definition is invalid"
    ERR_TIP = "(check the scenario files)"

    def __init__(
        self,
        *args,
        key: Optional[str] = None,
        line: Optional[int] = None,
        source: Optional[str] = None,
    ):
        super().__init__(*args)
        self.key = key
        self.line = line
        self.source = source

    def __str__(self) -> str:
        where = []
        if self.source:
            where.append(self.source)
        if self.key is not None:
            where.append(f"key '{self.key}'")
        if self.line is not None:
            where.append(f"line {self.line}")

        err_msg = f"{self.ERR_MSG} ({', '.join(where)})" if where else self.ERR_MSG
        if self.message:
            return f"{err_msg}: {self.message} {self.ERR_TIP}"
        return f"{err_msg} {self.ERR_TIP}"


class ContractViolationError(_HintedError):
    """Raised when a run breaks a contract that validation should have caught."""

    ERR_MSG = "A scenario contract was violated"
    ERR_TIP = "(this is a scenario-definition bug)"


class CoherenceError(ContractViolationError):
    """Raised when an action is executed on an agent that cannot run it."""

    ERR_MSG = "The action was executed in the wrong context"
    ERR_TIP = "(this is a planner bug)"


class UnknownHostError(ContractViolationError):
    """Raised when a host is not part of the environment."""

    ERR_MSG = "The host is not part of the environment"
    ERR_TIP = "(check the environment file)"


class NoCandidateError(BountyHunterError):
    """Raised when there is nothing left to select."""

    pass
