"""Concurrent execution of independent solves."""

from __future__ import annotations

import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import TypeVar

import click

T = TypeVar("T")


def run_tasks(tasks: Sequence[Callable[[], T]], *, workers: int, label: str) -> list[T]:
    """Run tasks on a thread pool; results come back in task order."""
    results: list[T | None] = [None] * len(tasks)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {executor.submit(task): k for k, task in enumerate(tasks)}
        with click.progressbar(
            length=len(tasks),
            label=label,
            show_eta=False,
            file=sys.stderr,
        ) as bar:
            for future in as_completed(future_to_index):
                results[future_to_index[future]] = future.result()
                bar.update(1)
    return results  # type: ignore[return-value]
