"""Constant-factor revenue maximization for communication-constrained
signaling: merge-based price competition and high-value-bidder mixing.

Two sub-procedures are built from an approximately welfare-maximizing
scheme.  The first merges signals pairwise in decreasing order of their
welfare contribution, forcing distinct winners to compete.  The second
excludes the player with the highest expected value for a random item,
solves welfare for the rest, and mixes that scheme with a constant-signal
lottery so the excluded player becomes a price setter everywhere.  The
returned plan is whichever of the two earns more revenue.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import bipartite, core
from .core import Instance, Scheme
from .errors import DegenerateInstance, UnsupportedConstraint, ValidationError

E = math.e
BETA = (E - 1) / (2 * E - 1)
APPROX_RATIO = 2 * E * (2 * E - 1) / (E - 1) ** 2  # ~ 8.1713


def merge_signals(inst: Instance, scheme: Scheme, s, t) -> Scheme:
    """Merge two used signals of a deterministic scheme.

    Items of both signals move to the lower of the two indices, which
    stands in for the merged label.  Per-player weighted bundle values of
    the merged signal are the sums over the two originals.
    """
    s = inst.signal_index(s)
    t = inst.signal_index(t)
    if s == t:
        raise ValidationError("cannot merge a signal with itself")
    mapping = scheme.mapping.copy()
    used = set(int(u) for u in np.unique(mapping))
    if s not in used or t not in used:
        raise ValidationError(f"signals {inst.signals[s]!r}, {inst.signals[t]!r} must both be used")
    lo, hi = min(s, t), max(s, t)
    mapping[mapping == hi] = lo
    return Scheme.deterministic(mapping)


def _bundles(inst: Instance, mapping: np.ndarray) -> dict[int, np.ndarray]:
    """Per-used-signal vector of per-player weighted bundle values."""
    return {
        int(s): inst.vhat[:, mapping == s].sum(axis=1)
        for s in np.unique(mapping)
    }


def _merge_same_winner(inst: Instance, scheme: Scheme) -> Scheme:
    """Merge pairs of signals sharing a winner until winners are unique."""
    while True:
        mapping = scheme.mapping
        bundles = _bundles(inst, mapping)
        by_winner: dict[int, int] = {}
        pair = None
        for s in sorted(bundles):
            w = int(np.argmax(bundles[s]))
            if w in by_winner:
                pair = (by_winner[w], s)
                break
            by_winner[w] = s
        if pair is None:
            return scheme
        scheme = merge_signals(inst, scheme, *pair)


def procedure1(inst: Instance, solver: str = "greedy", **solver_kwargs) -> Scheme:
    """Merge-down scheme: near-optimal revenue when no player dominates.

    Starts from the welfare solver's scheme, merges same-winner signals
    (welfare preserving), sorts the rest by welfare contribution, and
    merges them pairwise in that order; an odd last signal stays unmerged.
    """
    if not inst.complete:
        raise UnsupportedConstraint("procedure 1 requires a complete edge set")
    scheme = bipartite.solve_welfare(inst, solver=solver, **solver_kwargs)
    scheme = _merge_same_winner(inst, scheme)
    bundles = _bundles(inst, scheme.mapping)
    ranked = sorted(bundles, key=lambda s: (-float(bundles[s].max()), s))
    for a, b in zip(ranked[0::2], ranked[1::2]):
        scheme = merge_signals(inst, scheme, a, b)
    return scheme


def procedure2(inst: Instance, solver: str = "greedy", optimized_mix: bool = False,
               **solver_kwargs):
    """Price-setter mixture: near-optimal revenue when one player dominates.

    Returns (scheme, diagnostics).  The scheme mixes the welfare scheme h
    for players other than i* with a constant-signal lottery weighted by
    per-signal contributions, so i* bids roughly the per-signal welfare.
    """
    if not inst.complete:
        raise UnsupportedConstraint("procedure 2 requires a complete edge set")
    if inst.n < 2:
        raise DegenerateInstance("procedure 2 needs at least two players")
    expected = inst.vhat.sum(axis=1)  # player's value for a random item
    i_star = int(np.argmax(expected))
    v_star = float(expected[i_star])
    reduced = inst.exclude_player(i_star)
    h = bipartite.solve_welfare(reduced, solver=solver, **solver_kwargs)
    mapping = h.mapping
    others = [i for i in range(inst.n) if i != i_star]
    v_s = {
        int(s): float(inst.vhat[others][:, mapping == s].sum(axis=1).max())
        for s in np.unique(mapping)
    }
    welfare_h = sum(v_s.values())
    if welfare_h <= 0.0:
        raise DegenerateInstance("all players other than i* have zero value")
    alpha = v_star / welfare_h
    lottery = np.zeros(inst.num_signals)
    for s, contribution in v_s.items():
        lottery[s] = alpha * contribution / v_star
    h_weight = alpha / (1 + alpha) if optimized_mix else 0.5
    scheme = Scheme.mixture([(h_weight, mapping), (1 - h_weight, lottery)])
    diag = {
        "i_star": i_star,
        "v_star": v_star,
        "alpha": alpha,
        "welfare_h": welfare_h,
        "v_s": v_s,
        "h_weight": h_weight,
    }
    return scheme, diag


@dataclass(frozen=True)
class RevenuePlan:
    """Outcome of the two-procedure revenue algorithm."""

    scheme_g: Scheme
    scheme_x: Scheme | None
    chosen: str           # "procedure1" or "procedure2"
    revenue: float
    rev_g: float
    rev_x: float | None
    diagnostics: dict

    @property
    def scheme(self) -> Scheme:
        return self.scheme_g if self.chosen == "procedure1" else self.scheme_x


def solve_revenue(inst: Instance, optimized_mix: bool = False,
                  solver: str = "greedy", **solver_kwargs) -> RevenuePlan:
    """Run both procedures and keep the revenue-maximizing scheme.

    Ties go to procedure 1.  Degenerate cases (a single player, or zero
    welfare without i*) fall back to procedure 1 alone with revenue 0.
    """
    g = procedure1(inst, solver=solver, **solver_kwargs)
    rev_g = core.revenue(inst, g)
    scheme_x, rev_x, diag = None, None, {}
    try:
        scheme_x, diag = procedure2(inst, solver=solver, optimized_mix=optimized_mix,
                                    **solver_kwargs)
        rev_x = core.revenue(inst, scheme_x)
    except DegenerateInstance as exc:
        diag = {"degenerate": str(exc)}
    if rev_x is not None and rev_x > rev_g:
        chosen, value = "procedure2", rev_x
    else:
        chosen, value = "procedure1", rev_g
    return RevenuePlan(
        scheme_g=g,
        scheme_x=scheme_x,
        chosen=chosen,
        revenue=float(value),
        rev_g=float(rev_g),
        rev_x=None if rev_x is None else float(rev_x),
        diagnostics=diag,
    )
