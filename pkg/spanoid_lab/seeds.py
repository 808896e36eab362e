"""Seed splitting.

Every randomized sub-task receives its own stream derived from the single
global seed by counter: the task with path (k,) gets
``SeedSequence(global_seed, spawn_key=(k,))``, its j-th child gets
``spawn_key=(k, j)`` and so on. Adding a task never perturbs the streams
of the tasks before it.
"""
import numpy as np

MAX_SEED = 2**64 - 1


def task_sequence(seed: int, *task_path: int) -> np.random.SeedSequence:
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.SeedSequence(seed, spawn_key=tuple(task_path))


def task_rng(seed: int, *task_path: int) -> np.random.Generator:
    """Generator for the sub-task at `task_path` under the global `seed`"""
    return np.random.default_rng(task_sequence(seed, *task_path))


def task_seed(seed: int, *task_path: int) -> int:
    """A 64-bit integer seed for the sub-task, for APIs that take plain seeds"""
    return int(task_sequence(seed, *task_path).generate_state(1, dtype=np.uint64)[0])
