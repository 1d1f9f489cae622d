#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - Helper functions."""

from decimal import ROUND_HALF_UP, Decimal
import hashlib
from typing import Iterable, Mapping, Optional

from .const import ACTION_ID_REGEX, FACT_NAME_REGEX


def is_valid_fact_name(value) -> bool:
    """Return True if the value is a dotted fact name, e.g. 'krbtgt.sid'."""
    return isinstance(value, str) and bool(FACT_NAME_REGEX.match(value))


def is_valid_action_id(value) -> bool:
    """Return True if the value is a bare action id (no placeholder brackets)."""
    return isinstance(value, str) and bool(ACTION_ID_REGEX.match(value))


def round_half_up(value: Optional[float], places: int = 2) -> Optional[float]:
    """Round for display, 161.405 -> 161.41 (not banker's rounding)."""
    if value is None:
        return None
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def synthetic_token(*parts: str, length: int = 32) -> str:
    """Return a deterministic hex token, used for values the simulator invents."""
    digest = hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()
    return digest[:length]


def binding_key(binding: Mapping[str, str]) -> tuple:
    """Return a hashable, order-independent form of a binding."""
    return tuple(sorted(binding.items()))


def binding_str(binding: Mapping[str, str]) -> str:
    return ",".join(f"{k}={v}" for k, v in sorted(binding.items()))


def unique(items: Iterable) -> list:
    """Return the items in their original order, without duplicates."""
    return list(dict.fromkeys(items))
