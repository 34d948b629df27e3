"""Token-sequence models: Markov chains, explicit history tables, draft/target pairs.

A model describes x_0 ~ prompt followed by conditionals for x_1..x_T. Histories
are tuples (x_0, ..., x_{n-1}) and ``step(n, history)`` returns the probability
row of x_n, so samplers and oracles are written once against that interface.

JSON descriptors (the on-disk form consumed by the CLI):

    {"vocab_size": V, "horizon": T, "prompt": [..V floats..],
     "steps": [step_1, ..., step_T]}        each step a V x V row-stochastic table

    {"generator": "random", "seed": 10, "vocab_size": 7, "horizon": 50}

The generator form draws every transition row as normalized uniform variates
from a seeded stream and uses a uniform prompt.
"""

from __future__ import annotations

import numpy as np

from .dist import NORMALIZE_TOL, Dist

FULL_TABLE_CAP = 1_000_000


class CondDist:
    """One decoding step: a V x V table whose row s is the law of x_n given s."""

    __slots__ = ("_rows",)

    def __init__(self, rows) -> None:
        arr = np.asarray(rows, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("a conditional table must be square")
        normalized = np.stack([Dist(row).probs for row in arr])
        normalized.flags.writeable = False
        self._rows = normalized

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def vocab_size(self) -> int:
        return self._rows.shape[0]

    def row(self, state: int) -> np.ndarray:
        return self._rows[state]


class MarkovModel:
    """Nonstationary Markov chain: x_0 ~ prompt, x_n ~ steps[n-1].row(x_{n-1})."""

    __slots__ = ("_prompt", "_steps", "_prompt_cumsum", "_step_cumsums")

    def __init__(self, prompt: Dist, steps) -> None:
        steps = tuple(steps)
        if not steps:
            raise ValueError("horizon must be at least 1")
        v = len(prompt)
        for step in steps:
            if not isinstance(step, CondDist):
                raise TypeError("steps must be CondDist tables")
            if step.vocab_size != v:
                raise ValueError("all steps must share the prompt's vocabulary size")
        self._prompt = prompt
        self._steps = steps
        self._prompt_cumsum = np.cumsum(prompt.probs)
        cums = np.stack([np.cumsum(s.rows, axis=1) for s in steps])
        cums.flags.writeable = False
        self._step_cumsums = cums

    @property
    def prompt(self) -> Dist:
        return self._prompt

    @property
    def vocab_size(self) -> int:
        return len(self._prompt)

    @property
    def horizon(self) -> int:
        return len(self._steps)

    @property
    def steps(self) -> tuple[CondDist, ...]:
        return self._steps

    def step(self, n: int, history: tuple[int, ...]) -> np.ndarray:
        """Probability row of x_n given history (x_0, ..., x_{n-1})."""
        return self._steps[n - 1].row(history[-1])

    def step_cumsum(self, n: int, history: tuple[int, ...]) -> np.ndarray:
        return self._step_cumsums[n - 1, history[-1]]

    def context_key(self, n: int, history: tuple[int, ...]):
        """Hashable key identifying the conditional at (n, history)."""
        return (n, history[-1])

    @property
    def prompt_cumsum(self) -> np.ndarray:
        return self._prompt_cumsum


class FullModel:
    """General conditional model stored as explicit history tables.

    The table maps every history (x_0, ..., x_{n-1}) for 1 <= n <= horizon to
    the law of x_n. Intended for brute-force oracles; construction enforces
    V**horizon <= FULL_TABLE_CAP.
    """

    __slots__ = ("_prompt", "_horizon", "_table", "_cumsum_cache")

    def __init__(self, prompt: Dist, horizon: int, table: dict) -> None:
        v = len(prompt)
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        if v**horizon > FULL_TABLE_CAP:
            raise ValueError(f"V**T = {v**horizon} exceeds the table cap {FULL_TABLE_CAP}")
        frozen: dict[tuple[int, ...], np.ndarray] = {}
        for key, row in table.items():
            key = tuple(int(t) for t in key)
            if not 1 <= len(key) <= horizon:
                raise ValueError(f"history {key} has length outside 1..{horizon}")
            probs = row.probs if isinstance(row, Dist) else Dist(row).probs
            if probs.size != v:
                raise ValueError("table rows must match the vocabulary size")
            frozen[key] = probs
        expected = sum(v**n for n in range(1, horizon + 1))
        if len(frozen) != expected:
            raise ValueError(
                f"table must cover every history once: got {len(frozen)} entries, need {expected}"
            )
        self._prompt = prompt
        self._horizon = horizon
        self._table = frozen
        self._cumsum_cache: dict[tuple[int, ...], np.ndarray] = {}

    @classmethod
    def from_function(cls, prompt: Dist, horizon: int, fn) -> "FullModel":
        """Build a dense table by calling ``fn(n, history) -> row`` on every history."""
        v = len(prompt)
        if v**horizon > FULL_TABLE_CAP:
            raise ValueError(f"V**T = {v**horizon} exceeds the table cap {FULL_TABLE_CAP}")
        table = {}

        def expand(history: tuple[int, ...], n: int) -> None:
            if n > horizon:
                return
            table[history] = fn(n, history)
            for token in range(v):
                expand(history + (token,), n + 1)

        for x0 in range(v):
            expand((x0,), 1)
        return cls(prompt, horizon, table)

    @property
    def prompt(self) -> Dist:
        return self._prompt

    @property
    def vocab_size(self) -> int:
        return len(self._prompt)

    @property
    def horizon(self) -> int:
        return self._horizon

    def step(self, n: int, history: tuple[int, ...]) -> np.ndarray:
        row = self._table.get(history)
        if row is None:
            raise KeyError(f"no table entry for history {history}")
        return row

    def step_cumsum(self, n: int, history: tuple[int, ...]) -> np.ndarray:
        cached = self._cumsum_cache.get(history)
        if cached is None:
            cached = np.cumsum(self.step(n, history))
            self._cumsum_cache[history] = cached
        return cached

    def histories(self, n: int):
        """All conditioning histories of x_n, in deterministic (sorted) order."""
        return (key for key in sorted(self._table) if len(key) == n)

    def context_key(self, n: int, history: tuple[int, ...]):
        return (n, history)

    @property
    def prompt_cumsum(self) -> np.ndarray:
        return np.cumsum(self._prompt.probs)


def markov_to_full(model: MarkovModel) -> FullModel:
    """Expand a Markov chain into explicit history tables (oracle cross-checks)."""
    return FullModel.from_function(
        model.prompt, model.horizon, lambda n, h: model.step(n, h).copy()
    )


class ModelPair:
    """Draft model p and target model q over a shared vocabulary, horizon, prompt.

    Decoding draws a single x_0 that conditions both models, so the prompts
    must agree (within the Dist normalization tolerance).
    """

    __slots__ = ("_p", "_q")

    def __init__(self, p, q) -> None:
        if p.vocab_size != q.vocab_size:
            raise ValueError("draft and target must share the vocabulary size")
        if p.horizon != q.horizon:
            raise ValueError("draft and target must share the horizon")
        if not np.allclose(p.prompt.probs, q.prompt.probs, rtol=0.0, atol=NORMALIZE_TOL):
            raise ValueError("draft and target must share the prompt distribution")
        self._p = p
        self._q = q

    @property
    def p(self):
        return self._p

    @property
    def q(self):
        return self._q

    @property
    def vocab_size(self) -> int:
        return self._q.vocab_size

    @property
    def horizon(self) -> int:
        return self._q.horizon

    @property
    def prompt(self) -> Dist:
        return self._q.prompt


def joint_probability(model, tokens) -> float:
    """Probability of the trajectory x_{1:T} with the prompt token marginalized out.

    Args:
        model: MarkovModel or FullModel.
        tokens: sequence of T token ids.

    Returns:
        sum_{x_0} prompt(x_0) * prod_n model(x_n | x_0, x_{1:n-1}).
    """
    tokens = tuple(int(t) for t in tokens)
    if len(tokens) != model.horizon:
        raise ValueError(f"trajectory length {len(tokens)} != horizon {model.horizon}")
    total = 0.0
    for x0 in range(model.vocab_size):
        mass = model.prompt[x0]
        if mass == 0.0:
            continue
        history = (x0,)
        for n, token in enumerate(tokens, start=1):
            mass *= float(model.step(n, history)[token])
            if mass == 0.0:
                break
            history += (token,)
        total += mass
    return total


def joint_distribution(model) -> np.ndarray:
    """Exact law of x_{1:T} as a flat array of length V**T.

    Trajectories are indexed lexicographically, x_1 most significant:
    index = sum_n x_n * V**(T-n). Enforces V**T <= FULL_TABLE_CAP.
    """
    v, t = model.vocab_size, model.horizon
    if v**t > FULL_TABLE_CAP:
        raise ValueError(f"V**T = {v**t} exceeds the enumeration cap {FULL_TABLE_CAP}")
    out = np.zeros(v**t)

    def expand(history: tuple[int, ...], n: int, index: int, mass: float) -> None:
        if mass == 0.0:
            return
        if n > t:
            out[index] += mass
            return
        row = model.step(n, history)
        for token in range(v):
            expand(history + (token,), n + 1, index * v + token, mass * float(row[token]))

    for x0 in range(v):
        expand((x0,), 1, 0, model.prompt[x0])
    return out


def trajectory_index(tokens, vocab_size: int) -> int:
    """Flat index of a trajectory under the joint_distribution ordering."""
    index = 0
    for token in tokens:
        index = index * vocab_size + int(token)
    return index


def target_marginals(model: MarkovModel) -> list[Dist]:
    """Per-position marginals mu_1..mu_T of a Markov chain.

    The recursion starts from mu_0 = prompt and applies
    mu_n(x) = sum_s mu_{n-1}(s) * step_n(x | s).
    """
    if not isinstance(model, MarkovModel):
        raise TypeError("target_marginals requires a MarkovModel")
    out = []
    mu = model.prompt.probs
    for step in model.steps:
        mu = mu @ step.rows
        out.append(Dist(mu))
    return out


def random_markov_model(
    vocab_size: int, horizon: int, seed=None, rng: np.random.Generator | None = None
) -> MarkovModel:
    """Seeded random chain: uniform prompt, transition rows = normalized uniforms."""
    if rng is None:
        rng = np.random.default_rng(seed)
    steps = []
    for _ in range(horizon):
        raw = rng.uniform(size=(vocab_size, vocab_size))
        steps.append(CondDist(raw / raw.sum(axis=1, keepdims=True)))
    return MarkovModel(Dist.uniform(vocab_size), steps)


def random_model_pair(vocab_size: int, horizon: int, seed) -> ModelPair:
    """Draft/target pair drawn from two child streams of one master seed."""
    child_p, child_q = np.random.SeedSequence(seed).spawn(2)
    p = random_markov_model(vocab_size, horizon, rng=np.random.default_rng(child_p))
    q = random_markov_model(vocab_size, horizon, rng=np.random.default_rng(child_q))
    return ModelPair(p, q)


def model_to_descriptor(model: MarkovModel) -> dict:
    """Explicit JSON-serializable descriptor of a Markov model."""
    return {
        "vocab_size": model.vocab_size,
        "horizon": model.horizon,
        "prompt": model.prompt.probs.tolist(),
        "steps": [step.rows.tolist() for step in model.steps],
    }


def _require_positive_int(desc: dict, key: str) -> int:
    try:
        value = int(desc[key])
    except KeyError:
        raise ValueError(f"model descriptor is missing {key!r}") from None
    except (TypeError, ValueError):
        raise ValueError(f"model descriptor field {key!r} must be an integer") from None
    if value < 1:
        raise ValueError(f"model descriptor field {key!r} must be >= 1")
    return value


def model_from_descriptor(desc: dict) -> MarkovModel:
    """Build a MarkovModel from an explicit or generator-form descriptor."""
    if not isinstance(desc, dict):
        raise ValueError("model descriptor must be a JSON object")
    vocab_size = _require_positive_int(desc, "vocab_size")
    horizon = _require_positive_int(desc, "horizon")
    if "generator" in desc:
        if desc["generator"] != "random":
            raise ValueError(f"unknown generator {desc['generator']!r}")
        if "seed" not in desc:
            raise ValueError("generator-form descriptor requires a seed")
        return random_markov_model(vocab_size, horizon, seed=int(desc["seed"]))
    try:
        prompt = Dist(desc["prompt"])
        steps = [CondDist(step) for step in desc["steps"]]
    except KeyError as exc:
        raise ValueError(f"model descriptor is missing {exc.args[0]!r}") from None
    if len(prompt) != vocab_size:
        raise ValueError("prompt length does not match vocab_size")
    if len(steps) != horizon:
        raise ValueError("number of steps does not match horizon")
    return MarkovModel(prompt, steps)


def pair_from_descriptor(desc: dict) -> ModelPair:
    """Build a ModelPair from {"p": .., "q": ..} or a pair-level generator form.

    The pair-level generator {"generator": "random", "seed": s, ...} derives
    independent child seeds for p and q from the one master seed.
    """
    if not isinstance(desc, dict):
        raise ValueError("pair descriptor must be a JSON object")
    if "generator" in desc:
        if desc["generator"] != "random":
            raise ValueError(f"unknown generator {desc['generator']!r}")
        if "seed" not in desc:
            raise ValueError("generator-form descriptor requires a seed")
        return random_model_pair(
            _require_positive_int(desc, "vocab_size"),
            _require_positive_int(desc, "horizon"),
            int(desc["seed"]),
        )
    if "p" not in desc or "q" not in desc:
        raise ValueError('pair descriptor requires "p" and "q" models')
    return ModelPair(model_from_descriptor(desc["p"]), model_from_descriptor(desc["q"]))
