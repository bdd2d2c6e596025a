"""Numeric helpers shared by the models, environments and harness"""

import re
from typing import List, Sequence

import numpy as np


def wrap_angle(x):
    """Wrap angles to [-pi, pi)"""
    return (np.asarray(x) + np.pi) % (2.0 * np.pi) - np.pi


def wrap_periodic(values: np.ndarray, periodic_dims: Sequence[int]) -> np.ndarray:
    """Wrap the listed dimensions (last axis) of ``values`` to [-pi, pi)

    Args:
        values: Array whose last axis indexes state dimensions
        periodic_dims: Indices of angle dimensions

    Returns:
        A copy with periodic dimensions wrapped
    """
    out = np.array(values, dtype=float, copy=True)
    if periodic_dims:
        dims = list(periodic_dims)
        out[..., dims] = wrap_angle(out[..., dims])
    return out


def derive_seed(seed: int, *tags: int) -> int:
    """Derive an independent 32-bit seed from a base seed and integer tags

    Every random stream in trajinfo is keyed this way so that the order in
    which seeds or episodes run never changes their results.
    """
    entropy = [int(seed) & 0xFFFFFFFF] + [int(t) & 0xFFFFFFFF for t in tags]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def make_rng(seed: int, *tags: int) -> np.random.Generator:
    """Create a Generator for the stream identified by ``(seed, *tags)``"""
    return np.random.default_rng(derive_seed(seed, *tags))


def parse_seed_list(text: str) -> List[int]:
    """Parse ``"0..4"``, ``"1,3,5"`` or mixtures like ``"0..2,7"``

    Raises:
        ValueError: If a token is neither an integer nor a range
    """
    seeds: List[int] = []
    for token in (t.strip() for t in text.split(",")):
        if not token:
            continue
        match = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", token)
        if match:
            start, stop = int(match.group(1)), int(match.group(2))
            if stop < start:
                raise ValueError(f"Invalid seed range: {token}")
            seeds.extend(range(start, stop + 1))
        elif re.fullmatch(r"-?\d+", token):
            seeds.append(int(token))
        else:
            raise ValueError(f"Invalid seed token: {token!r}")
    if not seeds:
        raise ValueError("At least one seed is required")
    return seeds
