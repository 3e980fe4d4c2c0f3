"""A collection of random utilities for irssop."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from irssop.constants import BLOCK_SIZE, CSV_FLOAT_FORMAT, MAXINT_RANDOM_SEED

if TYPE_CHECKING:
    import pandas as pd

    from irssop.constants import OutputFormat


def db_to_linear(value_db: float) -> float:
    """Converts a power ratio in dB to linear scale."""
    return float(10.0 ** (value_db / 10.0))


def dbm_to_watt(value_dbm: float) -> float:
    """Converts a power in dBm to watts."""
    return float(10.0 ** ((value_dbm - 30.0) / 10.0))


def infer_random_state(
    random_state: int | np.random.Generator | None,
) -> tuple[int, np.random.Generator]:
    """Infer the random state from the given input.

    Args:
        random_state: The random state to infer.

    Returns:
        A static integer seed and a random number generator.
    """
    if isinstance(random_state, (int, np.integer)):
        np_rng = np.random.default_rng(random_state)
        static_seed = int(random_state)
    elif isinstance(random_state, np.random.Generator):
        np_rng = random_state
        static_seed = int(np_rng.integers(0, MAXINT_RANDOM_SEED))
    elif random_state is None:
        np_rng = np.random.default_rng()
        static_seed = int(np_rng.integers(0, MAXINT_RANDOM_SEED))
    else:
        raise ValueError(f"Invalid random_state {random_state}")

    return static_seed, np_rng


@dataclass(frozen=True)
class BlockStreams:
    """Independent generators owned by one block of Monte-Carlo trials."""

    channel: np.random.Generator
    """Channels, channel-ageing errors and phase errors."""
    selection: np.random.Generator
    """Random element subsets. Kept apart so that switching the selection rule
    leaves the channel draws untouched."""


def make_block_streams(seed: int, block_index: int) -> BlockStreams:
    """Deterministically derive the streams of a block from (seed, block_index)."""
    root = np.random.SeedSequence([seed, block_index])
    ss_channel, ss_selection = root.spawn(2)
    return BlockStreams(
        channel=np.random.default_rng(ss_channel),
        selection=np.random.default_rng(ss_selection),
    )


def block_layout(trials: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """Split `trials` into `(block_index, n_trials)` pairs of at most `block_size`.

    The layout depends on nothing but `trials`, so the set of draws is the same
    whatever the number of workers.
    """
    if trials < 1:
        raise ValueError(f"`trials` must be >= 1, got {trials}.")
    n_blocks = math.ceil(trials / block_size)
    return [
        (i, min(block_size, trials - i * block_size)) for i in range(n_blocks)
    ]


def write_table(df: pd.DataFrame, path: Path, fmt: OutputFormat) -> None:
    """Write a result table as CSV (12 significant digits) or JSON records."""
    path = Path(path)
    if fmt == "csv":
        df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    elif fmt == "json":
        df.to_json(path, orient="records", double_precision=15, indent=2)
    else:
        raise ValueError(f"Unknown output format {fmt!r}.")
