"""Batch drivers for irssop experiments."""

from __future__ import annotations
