"""Approximate welfare maximization via winner mappings.

Welfare maximization over bipartite- and cardinality-constrained schemes
reduces to maximizing a monotone submodular set function over signal-player
pairs, subject to a truncated partition matroid (at most one winner per
signal, at most k pairs).  Two solvers are provided: a deterministic lazy
greedy (1/2 guarantee) and a sampled continuous greedy with swap rounding
(1 - 1/e in expectation).  Priors with finite support t expand the ground
set to signal x player-tuple pairs of length t.
"""

import heapq
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import core
from .core import Instance, Prior, Scheme
from .errors import MatroidViolation, SizeGuardError, ValidationError

TUPLE_BUDGET = 100_000


@dataclass(frozen=True)
class WinnerMapping:
    """Pairs (signal index, winner); winner is a player or player tuple."""

    pairs: tuple[tuple[int, object], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    def signals(self) -> list[int]:
        return [s for s, _ in self.pairs]


class TruncatedPartitionMatroid:
    """Independence: at most one pair per signal and at most k pairs."""

    def __init__(self, k: int):
        if k < 1:
            raise ValidationError("matroid truncation k must be >= 1")
        self.k = k

    def independent(self, pairs) -> bool:
        signals = [s for s, _ in pairs]
        return len(signals) <= self.k and len(set(signals)) == len(signals)

    def check(self, pairs) -> None:
        if not self.independent(pairs):
            raise MatroidViolation(
                "winner mapping is dependent (repeated signal or more than k pairs)"
            )


def _winner_weight_row(inst: Instance, prior: Prior, signal: int, winner) -> np.ndarray:
    """Weight row w[j] = admissibility(j, s) * sum_l q_l vhat^l_{winner_l}(j)."""
    if isinstance(winner, tuple):
        row = np.zeros(inst.m)
        for l, i in enumerate(winner):
            row += prior.probs[l] * prior.values[l, i] * inst.p
    else:
        if prior.t != 1:
            raise ValidationError("scalar winners need a point prior; use tuples")
        row = prior.values[0, winner] * inst.p
    return np.where(inst.allowed[:, signal], row, 0.0)


def _ground_set(inst: Instance, prior: Prior):
    """All (signal, winner) elements in (signal, winner) order plus weights."""
    t = prior.t
    if t == 1:
        winners = list(range(inst.n))
    else:
        count = inst.n ** t
        if count > TUPLE_BUDGET:
            raise SizeGuardError(
                f"prior support {t} expands to n^t = {count} winner tuples, "
                f"above the budget of {TUPLE_BUDGET}"
            )
        winners = list(product(range(inst.n), repeat=t))
    elements = [(s, w) for s in range(inst.num_signals) for w in winners]
    weights = np.stack([
        _winner_weight_row(inst, prior, s, w) for s, w in elements
    ])
    return elements, weights


def _set_value(weights: np.ndarray, selected) -> float:
    if len(selected) == 0:
        return 0.0
    return float(weights[list(selected)].max(axis=0).sum())


def winner_mapping_welfare(inst: Instance, mapping: WinnerMapping,
                           prior: Prior | None = None) -> float:
    """welfare(W) = sum_j max over admissible selected pairs of the weight.

    Empty maxima count 0.  Raises MatroidViolation for dependent mappings.
    """
    pr = core._as_prior(inst, prior)
    TruncatedPartitionMatroid(inst.k).check(mapping.pairs)
    if not mapping.pairs:
        return 0.0
    rows = np.stack([
        _winner_weight_row(inst, pr, s, w) for s, w in mapping.pairs
    ])
    return float(rows.max(axis=0).sum())


def _lazy_greedy(weights: np.ndarray, parts: np.ndarray, k: int) -> list[int]:
    """Deterministic lazy greedy over the truncated partition matroid.

    Equivalent to naive greedy with ties broken by the lowest element index
    (elements are ordered by (signal, winner)).  Stale heap entries carry
    the round they were scored in; an entry is accepted only when re-scored
    in the current round, which restores exact naive semantics.
    """
    G, m = weights.shape
    current = np.zeros(m)
    gains = weights.sum(axis=1)
    round_no = 0
    heap = [(-gains[g], g, round_no) for g in range(G)]
    heapq.heapify(heap)
    part_used: set[int] = set()
    chosen: list[int] = []
    while heap and len(chosen) < k:
        neg, g, rnd = heapq.heappop(heap)
        if parts[g] in part_used:
            continue
        if rnd != round_no:
            fresh = float(np.maximum(weights[g] - current, 0.0).sum())
            heapq.heappush(heap, (-fresh, g, round_no))
            continue
        if -neg <= 1e-15:
            break
        chosen.append(g)
        part_used.add(int(parts[g]))
        np.maximum(current, weights[g], out=current)
        round_no += 1
    return chosen


def greedy_winner_mapping(inst: Instance, prior: Prior | None = None) -> WinnerMapping:
    """Lazy greedy winner mapping; ties by (signal index, player index)."""
    pr = core._as_prior(inst, prior)
    elements, weights = _ground_set(inst, pr)
    parts = np.array([s for s, _ in elements], dtype=np.int64)
    chosen = _lazy_greedy(weights, parts, inst.k)
    pairs = tuple(sorted((elements[g] for g in chosen), key=lambda e: (e[0], e[1])))
    return WinnerMapping(pairs)


def _linear_opt(grad: np.ndarray, parts: np.ndarray, k: int) -> list[int]:
    """Max-weight independent set for a linear objective (greedy by weight)."""
    order = np.argsort(-grad, kind="stable")
    out: list[int] = []
    used: set[int] = set()
    for g in order:
        if grad[g] <= 0 or len(out) >= k:
            break
        if parts[g] in used:
            continue
        out.append(int(g))
        used.add(int(parts[g]))
    return out


def _swap_round(y: np.ndarray, parts: np.ndarray, k: int,
                rng: np.random.Generator) -> list[int]:
    """Randomized pipage rounding on the partition-plus-cardinality structure.

    Each step moves mass between two fractional coordinates with the
    martingale choice of direction, first within parts, then across parts,
    so the expected indicator stays y and the result is independent.
    """
    y = y.copy()
    eps = 1e-12

    def fracs(mask_part=None):
        idx = np.flatnonzero((y > eps) & (y < 1 - eps))
        if mask_part is not None:
            idx = idx[parts[idx] == mask_part]
        return idx

    for part in np.unique(parts):
        while True:
            f = fracs(part)
            if len(f) < 2:
                break
            a, b = int(f[0]), int(f[1])
            ya, yb = y[a], y[b]
            if rng.random() < ya / (ya + yb):
                y[a], y[b] = ya + yb, 0.0
            else:
                y[a], y[b] = 0.0, ya + yb
    while True:
        f = fracs()
        if len(f) < 2:
            break
        a, b = int(f[0]), int(f[1])
        up = min(1 - y[a], y[b])     # raise a, lower b
        down = min(y[a], 1 - y[b])   # lower a, raise b
        if rng.random() < down / (up + down):
            y[a], y[b] = y[a] + up, y[b] - up
        else:
            y[a], y[b] = y[a] - down, y[b] + down
    f = fracs()
    if len(f) == 1:
        g = int(f[0])
        y[g] = 1.0 if rng.random() < y[g] else 0.0
    return [int(g) for g in np.flatnonzero(y > 0.5)]


def continuous_greedy_winner_mapping(inst: Instance, prior: Prior | None = None,
                                     samples: int = 64, steps: int = 32,
                                     seed: int = 0) -> WinnerMapping:
    """Sampled continuous greedy on the multilinear extension, then rounding.

    Per step, each coordinate's gradient is estimated from `samples`
    Bernoulli draws of the current fractional point; the step moves 1/steps
    toward the best independent set for the estimated gradient.
    """
    if samples < 1 or steps < 1:
        raise ValidationError("samples and steps must be >= 1")
    pr = core._as_prior(inst, prior)
    elements, weights = _ground_set(inst, pr)
    parts = np.array([s for s, _ in elements], dtype=np.int64)
    G = len(elements)
    rng = np.random.default_rng(seed)
    y = np.zeros(G)
    for _ in range(steps):
        grad = np.empty(G)
        for g in range(G):
            draws = rng.random((samples, G)) < y
            draws[:, g] = False
            present = draws[:, :, None] * weights[None, :, :]
            best = present.max(axis=1)  # (samples, m)
            grad[g] = np.maximum(weights[g] - best, 0.0).sum(axis=1).mean()
        step_set = _linear_opt(grad, parts, inst.k)
        y[step_set] += 1.0 / steps
        np.clip(y, 0.0, 1.0, out=y)
    chosen = _swap_round(y, parts, inst.k, rng)
    pairs = tuple(sorted((elements[g] for g in chosen), key=lambda e: (e[0], e[1])))
    return WinnerMapping(pairs)


def scheme_from_mapping(inst: Instance, mapping: WinnerMapping,
                        prior: Prior | None = None) -> Scheme:
    """Deterministic scheme realizing a winner mapping.

    Each item goes to the admissible selected signal whose winner values it
    most (ties to the lowest signal index), falling back to the
    no-information signal.  If that uses k+1 distinct signals, the selected
    signal with the smallest welfare contribution is folded into s0.
    """
    TruncatedPartitionMatroid(inst.k).check(mapping.pairs)
    pr = core._as_prior(inst, prior)
    rows = {s: _winner_weight_row(inst, pr, s, w) for s, w in mapping.pairs}
    return _scheme_from_rows(inst, rows)


def _fallback_signal(inst: Instance, item: int) -> int:
    if inst.no_info is not None:
        return inst.no_info
    opts = np.flatnonzero(inst.allowed[item])
    if opts.size == 0:
        raise ValidationError(f"item {item} has no admissible signal")
    return int(opts[0])


def _scheme_from_rows(inst: Instance, rows: dict[int, np.ndarray]) -> Scheme:
    f = np.empty(inst.m, dtype=np.int64)
    selected = sorted(rows)
    for j in range(inst.m):
        best_s, best_v = -1, -1.0
        for s in selected:
            if inst.allowed[j, s] and rows[s][j] > best_v:
                best_s, best_v = s, float(rows[s][j])
        f[j] = best_s if best_s >= 0 else _fallback_signal(inst, j)
    distinct = set(int(s) for s in np.unique(f))
    if len(distinct) > inst.k:
        # only possible when the s0 fallback joined k selected signals
        s0 = inst.no_info
        if s0 is None or s0 not in distinct:
            raise ValidationError("mapping infeasible: k+1 signals and no s0")
        contributions = {
            s: float(rows[s][f == s].sum()) for s in selected if s in distinct and s != s0
        }
        drop = min(contributions, key=lambda s: (contributions[s], s))
        f[f == drop] = s0
    return Scheme.deterministic(f)


def solve_welfare(inst: Instance, prior: Prior | None = None, solver: str = "greedy",
                  samples: int = 64, steps: int = 32, seed: int = 0) -> Scheme:
    """Winner-mapping welfare solver returning a valid scheme."""
    pr = core._as_prior(inst, prior)
    if solver == "greedy":
        mapping = greedy_winner_mapping(inst, pr)
    elif solver == "cg":
        mapping = continuous_greedy_winner_mapping(inst, pr, samples, steps, seed)
    else:
        raise ValidationError(f"unknown solver {solver!r}")
    return scheme_from_mapping(inst, mapping, pr)


def solve_bayes_support(inst: Instance, prior: Prior, solver: str = "greedy",
                        **kwargs) -> Scheme:
    """Welfare maximization under an explicit finite-support prior.

    Expands the ground set to signal x player-tuples (size |S| * n^t,
    guarded) and runs the winner-mapping solver on it.
    """
    return solve_welfare(inst, prior, solver=solver, **kwargs)
