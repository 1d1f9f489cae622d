#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
"""Bounty Hunter - a reward-driven adversary emulation planner."""

__version__ = "0.1.0"
