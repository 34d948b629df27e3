"""Monte Carlo campaigns cross-checking the samplers against the exact formulas.

Each run gets its own child stream split from the master seed, so campaigns
are reproducible run-for-run, independent of execution order, and safe to
parallelize; the report is assembled in run-index order either way. Reports
carry the matching closed-form reference value so empirical means can be
judged against their standard errors at every checkpoint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .decoding import (
    Policy,
    autoregressive_decode,
    batch_decode,
    generic_decode,
    speculative_decode,
)
from .enumeration import enumerate_expected_rejections
from .exact import expected_rejections_batch, expected_rejections_sd, limit_rejections
from .models import FULL_TABLE_CAP, ModelPair, joint_distribution, trajectory_index
from .rng import split_rng

ALGORITHMS = ("sd", "batch", "autoregressive", "generic")
TABULATION_CAP = 10_000


@dataclass(frozen=True)
class Campaign:
    """Specification of one simulation campaign.

    ``checkpoint_every`` sets the reporting cadence in runs; a final
    checkpoint at ``runs`` is always included.
    """

    pair: ModelPair
    algorithm: str
    runs: int
    seed: int
    batch_size: int = 1
    policy: Policy | None = None
    checkpoint_every: int = 100

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.algorithm == "generic" and self.policy is None:
            raise ValueError("algorithm 'generic' requires a policy")


@dataclass(frozen=True)
class Checkpoint:
    """Running summary after ``runs`` completed runs."""

    runs: int
    mean: float
    stderr: float
    exact: float | None
    rel_dev: float | None


@dataclass(frozen=True)
class CampaignReport:
    algorithm: str
    runs: int
    seed: int
    batch_size: int
    exact: float | None
    checkpoints: tuple[Checkpoint, ...]

    def to_json_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "runs": self.runs,
            "seed": self.seed,
            "batch_size": self.batch_size,
            "exact": self.exact,
            "checkpoints": [
                {
                    "runs": c.runs,
                    "mean": c.mean,
                    "stderr": c.stderr,
                    "exact": c.exact,
                    "rel_dev": c.rel_dev,
                }
                for c in self.checkpoints
            ],
        }

    def to_csv(self, header_lines=()) -> str:
        def fmt(x) -> str:
            return "" if x is None else f"{x:.12g}"

        lines = [f"# {line}" for line in header_lines]
        lines.append("checkpoint,mean,stderr,exact,rel_dev")
        for c in self.checkpoints:
            lines.append(
                f"{c.runs},{fmt(c.mean)},{fmt(c.stderr)},{fmt(c.exact)},{fmt(c.rel_dev)}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class UnbiasednessReport:
    algorithm: str
    runs: int
    l1: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class BatchScanRow:
    """One scan entry; ``batch_size`` None marks the infinite-batch limit row."""

    batch_size: int | None
    exact: float
    mean: float | None
    stderr: float | None


def _run_once(campaign: Campaign, rng: np.random.Generator) -> int:
    if campaign.algorithm == "sd":
        return speculative_decode(campaign.pair, rng)[1].rejections
    if campaign.algorithm == "batch":
        return batch_decode(campaign.pair, campaign.batch_size, rng)[1].rejections
    if campaign.algorithm == "generic":
        return generic_decode(campaign.pair, campaign.policy, rng)[1].rejections
    autoregressive_decode(campaign.pair.q, rng)
    return 0


def _exact_reference(campaign: Campaign) -> float | None:
    pair = campaign.pair
    if campaign.algorithm == "sd":
        return expected_rejections_sd(pair)
    if campaign.algorithm == "batch":
        return expected_rejections_batch(pair, campaign.batch_size).total
    if campaign.algorithm == "autoregressive":
        return 0.0
    if pair.vocab_size**pair.horizon <= FULL_TABLE_CAP:
        return enumerate_expected_rejections(pair, "generic", policy=campaign.policy)
    return None


def _checkpoint(counts: np.ndarray, k: int, exact: float | None) -> Checkpoint:
    sample = counts[:k]
    mean = float(sample.mean())
    stderr = 0.0 if k < 2 else float(sample.std(ddof=1) / math.sqrt(k))
    if exact is None:
        rel = None
    elif exact != 0.0:
        rel = (mean - exact) / exact
    else:
        rel = mean - exact  # absolute fallback at a zero reference
    return Checkpoint(runs=k, mean=mean, stderr=stderr, exact=exact, rel_dev=rel)


def run_campaign(campaign: Campaign) -> CampaignReport:
    """Execute all runs on split per-run streams and summarize at checkpoints."""
    exact = _exact_reference(campaign)
    counts = np.empty(campaign.runs, dtype=np.int64)
    for i in range(campaign.runs):
        counts[i] = _run_once(campaign, split_rng(campaign.seed, i))
    marks = list(range(campaign.checkpoint_every, campaign.runs + 1, campaign.checkpoint_every))
    if not marks or marks[-1] != campaign.runs:
        marks.append(campaign.runs)
    return CampaignReport(
        algorithm=campaign.algorithm,
        runs=campaign.runs,
        seed=campaign.seed,
        batch_size=campaign.batch_size,
        exact=exact,
        checkpoints=tuple(_checkpoint(counts, k, exact) for k in marks),
    )


def unbiasedness_check(
    pair: ModelPair,
    algorithm: str = "sd",
    runs: int = 1_000_000,
    seed: int = 0,
    *,
    batch_size: int = 1,
    policy: Policy | None = None,
    l1_threshold: float = 0.02,
) -> UnbiasednessReport:
    """Compare the empirical trajectory law against the exact target joint.

    Tabulates all V**T sequences (capped at TABULATION_CAP) over ``runs``
    decoding runs and passes iff the L1 distance to the target joint law is
    at most ``l1_threshold``.
    """
    size = pair.vocab_size**pair.horizon
    if size > TABULATION_CAP:
        raise ValueError(f"V**T = {size} exceeds the tabulation cap {TABULATION_CAP}")
    campaign = Campaign(
        pair=pair, algorithm=algorithm, runs=runs, seed=seed,
        batch_size=batch_size, policy=policy,
    )
    counts = np.zeros(size, dtype=np.int64)
    for i in range(runs):
        rng = split_rng(seed, i)
        if algorithm == "sd":
            trajectory = speculative_decode(pair, rng)[0]
        elif algorithm == "batch":
            trajectory = batch_decode(pair, campaign.batch_size, rng)[0]
        elif algorithm == "generic":
            trajectory = generic_decode(pair, campaign.policy, rng)[0]
        else:
            trajectory = autoregressive_decode(pair.q, rng)
        counts[trajectory_index(trajectory.tokens, pair.vocab_size)] += 1
    l1 = float(np.abs(counts / runs - joint_distribution(pair.q)).sum())
    return UnbiasednessReport(
        algorithm=algorithm, runs=runs, l1=l1, threshold=l1_threshold,
        passed=bool(l1 <= l1_threshold),
    )


def batch_scan(pair: ModelPair, batch_sizes, runs: int, seed: int) -> list[BatchScanRow]:
    """Exact and empirical rejections per batch size, closed by the limit row.

    Every batch size reuses the same master seed, so scans are reproducible
    and positively paired across rows.
    """
    rows = []
    for m in batch_sizes:
        exact = expected_rejections_batch(pair, int(m)).total
        report = run_campaign(
            Campaign(pair=pair, algorithm="batch", runs=runs, seed=seed, batch_size=int(m),
                     checkpoint_every=max(runs, 1))
        )
        final = report.checkpoints[-1]
        rows.append(BatchScanRow(int(m), exact, final.mean, final.stderr))
    rows.append(BatchScanRow(None, limit_rejections(pair), None, None))
    return rows


def report_header(command: str, config: dict) -> list[str]:
    """Standard two-line header echoed into CSV outputs."""
    return [
        f"specdec {command}",
        "config " + json.dumps(config, sort_keys=True, separators=(",", ":")),
    ]
