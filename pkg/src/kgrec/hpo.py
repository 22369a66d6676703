"""Seeded random-search hyperparameter optimization on validation AUC.

Pure random search rather than an adaptive sampler: dependency-free,
deterministic, and adequate at desk scale. Trial configs are pre-generated
sequentially from the seed, so results do not depend on execution schedule.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from kgrec.errors import KgrecError


@dataclass
class IntRange:
    low: int
    high: int  # inclusive

    def __post_init__(self):
        if self.high < self.low:
            raise KgrecError(f"empty integer range [{self.low}, {self.high}]")

    def sample(self, rng):
        return int(rng.integers(self.low, self.high + 1))


@dataclass
class FloatRange:
    low: float
    high: float
    log: bool = False

    def __post_init__(self):
        if self.high < self.low:
            raise KgrecError(f"empty range [{self.low}, {self.high}]")
        if self.log and self.low <= 0:
            raise KgrecError("log-scale range must be strictly positive")

    def sample(self, rng):
        if self.log:
            return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))
        return float(rng.uniform(self.low, self.high))


@dataclass
class Choice:
    options: list

    def __post_init__(self):
        if not self.options:
            raise KgrecError("categorical choice needs at least one option")

    def sample(self, rng):
        return self.options[int(rng.integers(len(self.options)))]


@dataclass
class TrialRecord:
    index: int
    params: dict
    objective: float  # nan when failed
    note: str = ""
    seconds: float = 0.0

    @property
    def failed(self):
        return not np.isfinite(self.objective)


DEFAULT_SPACES = {
    "deepwalk": {
        "walks_per_node": IntRange(5, 40),
        "walk_length": IntRange(10, 80),
        "window": IntRange(2, 10),
        "dimension": Choice([32, 64, 128]),
    },
    "rgcn": {
        "hidden_dim": Choice([16, 32, 64]),
        "weight_decay": FloatRange(1e-6, 1e-2, log=True),
        "learning_rate": FloatRange(1e-4, 1e-1, log=True),
    },
}
DEFAULT_SPACES["brw"] = DEFAULT_SPACES["deepwalk"]


def sample_space(space, rng):
    return {name: spec.sample(rng) for name, spec in sorted(space.items())}


def run_search(objective, space, n_trials, seed=0):
    """Evaluate ``objective(params) -> validation AUC`` on random configs.

    Failed trials are recorded with their error note and never abort the
    study; every trial failing is an error. Returns (best params, records),
    best by argmax with first-trial tie-breaking.
    """
    if n_trials < 1:
        raise KgrecError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    configs = [sample_space(space, rng) for _ in range(n_trials)]
    records = []
    for i, params in enumerate(configs):
        start = time.perf_counter()
        try:
            value = float(objective(params))
            note = ""
        except Exception as exc:
            value = float("nan")
            note = f"{type(exc).__name__}: {exc}"
        records.append(TrialRecord(index=i, params=params, objective=value,
                                   note=note, seconds=time.perf_counter() - start))
    ok = [r for r in records if not r.failed]
    if not ok:
        notes = "; ".join(f"trial {r.index}: {r.note}" for r in records)
        raise KgrecError(f"all {n_trials} trials failed: {notes}")
    best = max(ok, key=lambda r: (r.objective, -r.index))
    return best.params, records


def write_study_csv(records, path):
    names = sorted({k for r in records for k in r.params})
    with open(path, "w", encoding="utf-8") as f:
        f.write("trial,objective,seconds,note," + ",".join(names) + "\n")
        for r in records:
            vals = ",".join(str(r.params.get(n, "")) for n in names)
            f.write(f"{r.index},{r.objective},{r.seconds:.3f},{r.note},{vals}\n")
