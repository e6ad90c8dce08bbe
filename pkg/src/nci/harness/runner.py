"""Deterministic parallel sweeps with append-only JSON-lines output.

Task seeds
----------
Each task is keyed by ``(grid_index, seed_index)`` where ``seed_index`` is
the seed value listed in the config. Its 64-bit seed is

    mix(mix(mix(master_seed) ^ g) ^ seed_index)

with ``mix`` the SplitMix64 finalizer (increment ``0x9E3779B97F4A7C15``,
multipliers ``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB``, shifts 30,
27, 31) and ``g`` the grid index, or 0 when ``share_disorder`` is set.

Record schema
-------------
One JSON object per line: ``key``, ``experiment``, ``params`` (every
resolved model parameter), ``options`` (kernel, coordinates, window),
``grid_index``, ``seed_index``, ``task_seed``, ``status`` (``ok`` or
``error``), ``value`` as ``[re, im]``, ``quantized_value``, ``deviation``,
``diagnostics``, ``error``, ``wall_time_ms`` and ``code_version``.

The summary CSV next to the output holds one row per grid point with the
mean and standard error of the value over successful seeds.
"""

from __future__ import annotations

import concurrent.futures as cf
import csv
import json
import math
import os
import time
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .config import SweepConfig
from .experiments import run_task, sector_memory_bytes

__all__ = ["splitmix64", "task_seed", "Task", "SummaryRow", "SweepReport", "run_sweep",
           "rerun_record", "read_records", "summary_path", "code_version", "iter_sweep"]

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def task_seed(master_seed: int, grid_index: int, seed_index: int) -> int:
    return splitmix64(splitmix64(splitmix64(master_seed) ^ grid_index) ^ seed_index)


def code_version() -> str:
    from .. import __version__
    return __version__


@dataclass(frozen=True)
class Task:
    experiment: str
    params: dict
    options: dict
    grid_index: int
    seed_index: int
    task_seed: int

    @property
    def key(self) -> str:
        return f"{self.grid_index}:{self.seed_index}"


@dataclass(frozen=True)
class SummaryRow:
    grid_index: int
    params: dict
    n_ok: int
    n_failed: int
    mean: complex
    stderr_re: float
    stderr_im: float
    mean_deviation: float


@dataclass(frozen=True)
class SweepReport:
    records: list
    summary: list
    skipped: int
    failed: int
    output: str


def _tasks(config: SweepConfig):
    out = []
    for g, params in enumerate(config.grid_points()):
        g_seed = 0 if config.share_disorder else g
        for s in config.seeds:
            out.append(Task(config.experiment, params, config.options, g, s,
                            task_seed(config.master_seed, g_seed, s)))
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _execute(task: Task) -> dict:
    """Worker entry point; never raises."""
    t0 = time.perf_counter()
    rec = {"key": task.key, "experiment": task.experiment, "params": task.params,
           "options": task.options, "grid_index": task.grid_index,
           "seed_index": task.seed_index, "task_seed": task.task_seed}
    try:
        res = run_task(task.experiment, task.params, task.task_seed, task.options)
        rec.update(status="ok", value=[res["value"].real, res["value"].imag],
                   quantized_value=res["quantized_value"], deviation=res["deviation"],
                   diagnostics=res["diagnostics"], error=None)
    except Exception as exc:  # recorded, the sweep goes on
        rec.update(status="error", value=None, quantized_value=None, deviation=None,
                   diagnostics={}, error=f"{type(exc).__name__}: {exc}")
    rec["wall_time_ms"] = (time.perf_counter() - t0) * 1e3
    rec["code_version"] = code_version()
    return _jsonable(rec)


def rerun_record(record: dict) -> dict:
    """Recompute a record from its own fields."""
    task = Task(record["experiment"], record["params"], record["options"],
                record["grid_index"], record["seed_index"], record["task_seed"])
    return _execute(task)


def read_records(path) -> list:
    """Parse a JSON-lines file, ignoring a truncated or corrupt line."""
    out = []
    if not os.path.exists(path):
        return out
    with open(path) as fh:
        for line in fh:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(rec, dict) and "key" in rec:
                out.append(rec)
    return out


def _drop_partial_tail(path):
    with open(path, "rb+") as fh:
        data = fh.read()
        if data and not data.endswith(b"\n"):
            fh.truncate(data.rfind(b"\n") + 1)


def summary_path(output) -> str:
    root, _ = os.path.splitext(str(output))
    return root + ".summary.csv"


def _summarize(config, records):
    latest = {}
    for rec in records:
        latest[rec["key"]] = rec
    points = config.grid_points()
    rows = []
    for g, params in enumerate(points):
        recs = sorted((r for r in latest.values() if r["grid_index"] == g),
                      key=lambda r: r["seed_index"])
        ok = [r for r in recs if r["status"] == "ok"]
        vals = np.array([complex(*r["value"]) for r in ok]) if ok else np.zeros(0, complex)
        devs = [r["deviation"] for r in ok if r["deviation"] is not None]
        n = vals.size
        mean = complex(vals.mean()) if n else complex("nan")
        se_re = float(np.std(vals.real, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
        se_im = float(np.std(vals.imag, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
        rows.append(SummaryRow(g, params, n, len(recs) - n, mean, se_re, se_im,
                               float(np.mean(devs)) if devs else float("nan")))
    return rows


def _write_summary(path, rows):
    names = sorted({k for r in rows for k in r.params})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["grid_index", *names, "n_ok", "n_failed", "mean_re", "mean_im",
                    "stderr_re", "stderr_im", "mean_deviation"])
        for r in rows:
            w.writerow([r.grid_index, *[r.params.get(k) for k in names], r.n_ok, r.n_failed,
                        repr(r.mean.real), repr(r.mean.imag), repr(r.stderr_re),
                        repr(r.stderr_im), repr(r.mean_deviation)])


def _available_memory():
    try:
        return os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return None


def _worker_limit(config, tasks, threads):
    if config.experiment != "manybody_pairing" or not tasks:
        return threads
    avail = _available_memory()
    if avail is None:
        return threads
    need = max(sector_memory_bytes(t.params) for t in tasks)
    return max(1, min(threads, avail // max(need, 1)))


def iter_sweep(config: SweepConfig, threads: int = 1, resume: bool = False,
               output: Optional[str] = None) -> Iterator[dict]:
    """Run the sweep, yielding records as they are written."""
    path = output or config.output
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    done = set()
    if resume and os.path.exists(path):
        _drop_partial_tail(path)
        done = {r["key"] for r in read_records(path) if r.get("status") == "ok"}
    elif os.path.exists(path):
        os.remove(path)
    tasks = [t for t in _tasks(config) if t.key not in done]
    workers = _worker_limit(config, tasks, max(1, int(threads)))
    with open(path, "a") as fh:
        def write(rec):
            fh.write(json.dumps(rec) + "\n")
            fh.flush()
            return rec

        if workers == 1:
            for t in tasks:
                yield write(_execute(t))
        else:
            with cf.ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_execute, t) for t in tasks]
                for fut in cf.as_completed(futures):
                    yield write(fut.result())


def run_sweep(config: SweepConfig, threads: int = 1, resume: bool = False,
              output: Optional[str] = None) -> SweepReport:
    """Execute every (grid point, seed) task and write records plus summary.

    Per-task failures are recorded with ``status = "error"``. With
    ``resume`` the tasks already completed in the output are skipped; a
    truncated final line is discarded first.
    """
    path = output or config.output
    fresh = list(iter_sweep(config, threads, resume, path))
    records = read_records(path)
    rows = _summarize(config, records)
    _write_summary(summary_path(path), rows)
    failed = sum(r.n_failed for r in rows)
    skipped = len(_tasks(config)) - len(fresh)
    return SweepReport(records, rows, skipped, failed, path)
