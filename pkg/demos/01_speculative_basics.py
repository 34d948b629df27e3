"""Speculative decoding on a small Markov pair: runs, rejections, acceleration.

A draft chain p proposes tokens to the horizon, the target chain q verifies
them, and each rejection costs one extra target evaluation. The expected
rejection count has a closed form, checked here against a seeded simulation.
"""

import numpy as np

from specdec import (
    Campaign,
    acceleration_rate,
    expected_rejections_sd,
    random_model_pair,
    run_campaign,
    sd_marginal_terms,
    speculative_decode,
    split_rng,
)

VOCAB = 5
HORIZON = 12
SEED = 42

pair = random_model_pair(VOCAB, HORIZON, seed=SEED)

print(f"pair: V={VOCAB}, T={HORIZON}, seed={SEED}")
print()

# A few individual runs: the trajectory plus which positions were replaced.
print("sample runs")
for i in range(5):
    trajectory, stats = speculative_decode(pair, split_rng(SEED, i))
    marks = "".join("x" if f else "." for f in stats.flags)
    print(f"  run {i}: tokens={''.join(map(str, trajectory.tokens))}  "
          f"rejected at [{marks}]  ({stats.rejections} rejections)")
print()

exact = expected_rejections_sd(pair)
print(f"exact expected rejections  {exact:.6f}")
print(f"acceleration rate          {acceleration_rate(exact, HORIZON):.4f} tokens per call")
print()

print("per-position rejection probability")
for n, term in enumerate(sd_marginal_terms(pair), start=1):
    bar = "#" * int(round(term * 60))
    print(f"  n={n:2d}  {term:.4f}  {bar}")
print()

report = run_campaign(Campaign(pair=pair, algorithm="sd", runs=4000, seed=7, checkpoint_every=1000))
print("simulation vs formula")
print("  runs    mean     stderr    exact")
for ck in report.checkpoints:
    print(f"  {ck.runs:5d}  {ck.mean:.4f}  {ck.stderr:.4f}   {ck.exact:.4f}")
final = report.checkpoints[-1]
sigmas = abs(final.mean - final.exact) / final.stderr
print(f"final mean is {sigmas:.2f} stderr away from the closed form")
