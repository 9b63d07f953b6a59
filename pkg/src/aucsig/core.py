"""Data model for signaling instances and schemes, and exact evaluation.

An instance bundles the item distribution, player valuations, the signal
set with its bipartite edge constraint, and the budget k on distinct
signals.  A scheme is a finite weighted mixture of deterministic item-to-
signal maps and (for complete edge sets) item-independent signal lotteries.
Welfare and revenue are evaluated from the scheme's marginal matrix using
probability-weighted values, so signals of probability zero never cause a
0/0.
"""

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    UnsupportedConstraint,
    ValidationError,
    ZeroProbabilitySignal,
)

PROB_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """A constrained signaling instance with known valuations.

    Attributes:
        p: item probabilities, shape (m,), summing to 1.
        values: nonnegative player valuations, shape (n, m).
        signals: signal labels.
        k: budget on the number of distinct signals a scheme may use.
        allowed: (m, S) boolean edge matrix; allowed[j, s] means item j may
            be mapped to signal s.
        no_info: index of the universally-connected signal s0, required
            whenever k < S.
    """

    p: np.ndarray
    values: np.ndarray
    signals: tuple[str, ...]
    k: int
    allowed: np.ndarray
    no_info: int | None

    @classmethod
    def create(cls, p, values, signals=None, k=None, edges=None, no_info=None,
               renormalize=False) -> "Instance":
        p = np.asarray(p, dtype=float)
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if renormalize and p.sum() > 0:
            p = p / p.sum()
        m = p.shape[0]
        if signals is None:
            signals = tuple(f"s{i}" for i in range(m))
        signals = tuple(str(s) for s in signals)
        S = len(signals)
        if k is None:
            k = S
        if edges is None:
            allowed = np.ones((m, S), dtype=bool)
        elif isinstance(edges, np.ndarray) and edges.dtype == bool:
            allowed = edges.copy()
        else:
            allowed = np.zeros((m, S), dtype=bool)
            label_to_idx = {lab: i for i, lab in enumerate(signals)}
            for item, sig in edges:
                sidx = sig if isinstance(sig, (int, np.integer)) else label_to_idx.get(sig)
                if sidx is None or not (0 <= int(item) < m and 0 <= sidx < S):
                    raise ValidationError(f"edge ({item}, {sig}) out of range")
                allowed[int(item), sidx] = True
        if no_info is not None and not isinstance(no_info, (int, np.integer)):
            no_info = signals.index(str(no_info))
        inst = cls(
            p=_readonly(p),
            values=_readonly(values),
            signals=signals,
            k=int(k),
            allowed=_readonly(allowed),
            no_info=None if no_info is None else int(no_info),
        )
        inst.validate()
        return inst

    def validate(self) -> None:
        problems = []
        m, S = self.m, self.num_signals
        if self.values.shape != (self.n, m):
            problems.append(f"values shape {self.values.shape} incompatible with m={m}")
        if abs(float(self.p.sum()) - 1.0) > PROB_TOL:
            problems.append(f"item probabilities sum to {self.p.sum()!r}, not 1")
        if (self.p < 0).any():
            problems.append("negative item probability")
        if (self.values < 0).any():
            problems.append("negative valuation entry")
        if self.k < 1:
            problems.append(f"signal budget k={self.k} must be >= 1")
        if len(set(self.signals)) != S or S == 0:
            problems.append("signal labels must be nonempty and unique")
        if self.allowed.shape != (m, S):
            problems.append(f"edge matrix shape {self.allowed.shape} != ({m}, {S})")
        elif not self.allowed.any(axis=1).all():
            bad = np.flatnonzero(~self.allowed.any(axis=1))
            problems.append(f"items {bad.tolist()} have no admissible signal")
        if self.no_info is not None:
            if not 0 <= self.no_info < S:
                problems.append(f"no_info index {self.no_info} out of range")
            elif not self.allowed[:, self.no_info].all():
                problems.append("no_info signal is not connected to every item")
        if self.k < S and self.no_info is None:
            problems.append(f"k={self.k} < |S|={S} requires a no-information signal")
        if problems:
            raise ValidationError("; ".join(problems))

    @property
    def m(self) -> int:
        return self.p.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def num_signals(self) -> int:
        return len(self.signals)

    @property
    def complete(self) -> bool:
        return bool(self.allowed.all())

    @cached_property
    def vhat(self) -> np.ndarray:
        """Probability-weighted values, vhat[i, j] = p_j * v_i(j)."""
        return _readonly(self.values * self.p)

    def signal_index(self, signal) -> int:
        if isinstance(signal, (int, np.integer)):
            if not 0 <= int(signal) < self.num_signals:
                raise ValidationError(f"signal index {signal} out of range")
            return int(signal)
        try:
            return self.signals.index(str(signal))
        except ValueError:
            raise ValidationError(f"unknown signal label {signal!r}") from None

    def exclude_player(self, player: int) -> "Instance":
        """Copy of the instance with one player removed."""
        if not 0 <= player < self.n:
            raise ValidationError(f"player {player} out of range")
        keep = [i for i in range(self.n) if i != player]
        return Instance.create(self.p, self.values[keep], self.signals, self.k,
                               edges=self.allowed.copy(), no_info=self.no_info)


@dataclass(frozen=True, eq=False)
class Prior:
    """Explicit finite-support prior over valuation matrices."""

    probs: np.ndarray   # (t,)
    values: np.ndarray  # (t, n, m)

    @classmethod
    def create(cls, probs, values) -> "Prior":
        probs = np.asarray(probs, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim != 3 or probs.ndim != 1 or probs.shape[0] != values.shape[0]:
            raise ValidationError("prior needs probs (t,) and values (t, n, m)")
        if probs.shape[0] < 1:
            raise ValidationError("prior support must be nonempty")
        if abs(float(probs.sum()) - 1.0) > PROB_TOL or (probs < 0).any():
            raise ValidationError(f"prior probabilities sum to {probs.sum()!r}, not 1")
        if (values < 0).any():
            raise ValidationError("negative valuation in prior support")
        return cls(probs=_readonly(probs), values=_readonly(values))

    @classmethod
    def point(cls, values) -> "Prior":
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return cls.create(np.ones(1), values[None, :, :])

    @property
    def t(self) -> int:
        return self.probs.shape[0]


def _as_prior(inst: Instance, prior: Prior | None) -> Prior:
    if prior is None:
        return Prior.point(inst.values)
    if prior.values.shape[1:] != (inst.n, inst.m):
        raise ValidationError(
            f"prior support shape {prior.values.shape[1:]} != (n, m) = ({inst.n}, {inst.m})"
        )
    return prior


@dataclass(frozen=True, eq=False)
class SchemeComponent:
    """One mixture component: a deterministic map or a constant lottery."""

    weight: float
    mapping: np.ndarray | None = None  # (m,) signal indices
    lottery: np.ndarray | None = None  # (S,) signal probabilities

    def __post_init__(self):
        if (self.mapping is None) == (self.lottery is None):
            raise ValidationError("component must have exactly one of mapping/lottery")


@dataclass(frozen=True, eq=False)
class Scheme:
    """A signaling scheme: finite weighted mixture of components."""

    components: tuple[SchemeComponent, ...]

    @classmethod
    def deterministic(cls, mapping) -> "Scheme":
        mapping = _readonly(np.asarray(mapping, dtype=np.int64))
        return cls((SchemeComponent(1.0, mapping=mapping),))

    @classmethod
    def lottery(cls, probs) -> "Scheme":
        probs = _readonly(np.asarray(probs, dtype=float))
        return cls((SchemeComponent(1.0, lottery=probs),))

    @classmethod
    def mixture(cls, weighted_components) -> "Scheme":
        comps = []
        for weight, part in weighted_components:
            part = np.asarray(part)
            if part.dtype.kind in "iu":
                comps.append(SchemeComponent(float(weight), mapping=_readonly(part.astype(np.int64))))
            else:
                comps.append(SchemeComponent(float(weight), lottery=_readonly(part.astype(float))))
        return cls(tuple(comps))

    @property
    def is_deterministic(self) -> bool:
        return len(self.components) == 1 and self.components[0].mapping is not None

    @property
    def mapping(self) -> np.ndarray:
        if not self.is_deterministic:
            raise ValidationError("scheme is not a single deterministic map")
        return self.components[0].mapping

    def used_signals(self) -> set[int]:
        used: set[int] = set()
        for c in self.components:
            if c.mapping is not None:
                used.update(int(s) for s in np.unique(c.mapping))
            else:
                used.update(int(s) for s in np.flatnonzero(c.lottery > 0))
        return used


def validate_scheme(inst: Instance, scheme: Scheme) -> None:
    """Raise ValidationError listing every violation of scheme validity."""
    problems = []
    if not scheme.components:
        problems.append("scheme has no components")
    total = 0.0
    for idx, c in enumerate(scheme.components):
        if not 0.0 < c.weight <= 1.0:
            problems.append(f"component {idx} weight {c.weight} outside (0, 1]")
        total += c.weight
        if c.mapping is not None:
            f = c.mapping
            if f.shape != (inst.m,):
                problems.append(f"component {idx} map has shape {f.shape}, wanted ({inst.m},)")
                continue
            if (f < 0).any() or (f >= inst.num_signals).any():
                problems.append(f"component {idx} map uses out-of-range signals")
                continue
            bad = np.flatnonzero(~inst.allowed[np.arange(inst.m), f])
            if bad.size:
                pairs = [(int(j), inst.signals[int(f[j])]) for j in bad[:5]]
                problems.append(f"component {idx} violates edges at {pairs}")
        else:
            q = c.lottery
            if q.shape != (inst.num_signals,):
                problems.append(f"component {idx} lottery has shape {q.shape}")
                continue
            if (q < 0).any() or abs(float(q.sum()) - 1.0) > PROB_TOL:
                problems.append(f"component {idx} lottery is not a distribution")
            if not inst.complete:
                problems.append(
                    f"component {idx} is a constant lottery but the edge set is not complete"
                )
    if scheme.components and abs(total - 1.0) > PROB_TOL:
        problems.append(f"component weights sum to {total!r}, not 1")
    if not problems:
        used = scheme.used_signals()
        if len(used) > inst.k:
            problems.append(f"scheme uses {len(used)} distinct signals, budget k={inst.k}")
    if problems:
        raise ValidationError("; ".join(problems))


def marginals(scheme: Scheme, inst: Instance) -> np.ndarray:
    """Marginal matrix x with x[j, s] = Pr[item j is mapped to signal s]."""
    validate_scheme(inst, scheme)
    x = np.zeros((inst.m, inst.num_signals))
    for c in scheme.components:
        if c.mapping is not None:
            x[np.arange(inst.m), c.mapping] += c.weight
        else:
            x += c.weight * c.lottery
    return x


def signal_probabilities(inst: Instance, x: np.ndarray) -> np.ndarray:
    """x(s) = sum_j p_j x(j, s)."""
    return inst.p @ x


def conditional_value(inst: Instance, scheme: Scheme, player: int, signal) -> float:
    """Posterior expected value of one player given one signal.

    Raises ZeroProbabilitySignal when the signal has probability zero.
    """
    s = inst.signal_index(signal)
    if not 0 <= player < inst.n:
        raise ValidationError(f"player {player} out of range")
    x = marginals(scheme, inst)
    xs = float(inst.p @ x[:, s])
    if xs <= 0.0:
        raise ZeroProbabilitySignal(f"signal {inst.signals[s]!r} has probability 0")
    return float((x[:, s] * inst.vhat[player]).sum() / xs)


def _signal_values(inst: Instance, x: np.ndarray, prior: Prior) -> np.ndarray:
    """Weighted per-signal values, shape (t, n, S): sum_j x(j,s) p_j v^l_i(j)."""
    vhat = prior.values * inst.p  # (t, n, m)
    return vhat @ x


def welfare(inst: Instance, scheme: Scheme, prior: Prior | None = None) -> float:
    """Expected second-price welfare of the scheme (highest weighted value per signal)."""
    pr = _as_prior(inst, prior)
    vals = _signal_values(inst, marginals(scheme, inst), pr)
    return float(pr.probs @ vals.max(axis=1).sum(axis=1))


def revenue(inst: Instance, scheme: Scheme, prior: Prior | None = None) -> float:
    """Expected second-price revenue (second-highest weighted value per signal)."""
    pr = _as_prior(inst, prior)
    if inst.n < 2:
        validate_scheme(inst, scheme)
        return 0.0
    vals = _signal_values(inst, marginals(scheme, inst), pr)
    second = np.partition(vals, -2, axis=1)[:, -2, :]
    return float(pr.probs @ second.sum(axis=1))


def welfare_excluding(inst: Instance, scheme: Scheme, excluded: int,
                      prior: Prior | None = None) -> float:
    """Welfare with the per-signal max restricted to players != excluded."""
    pr = _as_prior(inst, prior)
    if inst.n <= 1:
        validate_scheme(inst, scheme)
        return 0.0
    vals = _signal_values(inst, marginals(scheme, inst), pr)
    keep = [i for i in range(inst.n) if i != excluded]
    return float(pr.probs @ vals[:, keep, :].max(axis=1).sum(axis=1))


@dataclass(frozen=True)
class ReportRow:
    signal: str
    prob: float
    winner: int
    first: float
    second: float


@dataclass(frozen=True)
class AuctionReport:
    """Per-signal auction outcome for a scheme under known valuations."""

    rows: tuple[ReportRow, ...]
    welfare: float
    revenue: float

    CSV_HEADER = "signal,prob,winner,first,second"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.signal},{r.prob:.12g},{r.winner},{r.first:.12g},{r.second:.12g}"
            )
        lines.append(f"# welfare={self.welfare:.12g}")
        lines.append(f"# revenue={self.revenue:.12g}")
        return "\n".join(lines) + "\n"


def auction_report(inst: Instance, scheme: Scheme, prior: Prior | None = None) -> AuctionReport:
    """Tabulate winner, price and value per signal.  Point priors only.

    Argmax ties go to the lowest player index; this affects only the named
    winner, never the welfare/revenue totals.
    """
    pr = _as_prior(inst, prior)
    if pr.t != 1:
        raise ValidationError("auction reports are defined for point priors (t=1) only")
    x = marginals(scheme, inst)
    probs = signal_probabilities(inst, x)
    vals = _signal_values(inst, x, pr)[0]  # (n, S)
    rows = []
    for s in range(inst.num_signals):
        if probs[s] <= 0:
            continue
        winner = int(np.argmax(vals[:, s]))
        first = float(vals[winner, s] / probs[s])
        if inst.n >= 2:
            second = float(np.partition(vals[:, s], -2)[-2] / probs[s])
        else:
            second = 0.0
        rows.append(ReportRow(inst.signals[s], float(probs[s]), winner, first, second))
    return AuctionReport(
        rows=tuple(rows),
        welfare=welfare(inst, scheme, pr),
        revenue=revenue(inst, scheme, pr),
    )


def full_welfare_scheme(inst: Instance) -> Scheme:
    """Scheme with at most min(m, n) signals and full-information welfare.

    For n <= m this is the winner partition (item -> signal of its argmax
    player); otherwise the identity map announcing the item.  Requires a
    complete edge set and enough signals/budget to host the partition.
    """
    if not inst.complete:
        raise UnsupportedConstraint("full_welfare_scheme requires a complete edge set")
    if inst.n <= inst.m:
        winners = np.argmax(inst.values, axis=0)  # ties -> lowest player index
        distinct = sorted(set(int(w) for w in winners))
        needed = len(distinct)
        slot = {w: i for i, w in enumerate(distinct)}
        mapping = np.array([slot[int(w)] for w in winners], dtype=np.int64)
    else:
        needed = inst.m
        mapping = np.arange(inst.m, dtype=np.int64)
    if inst.num_signals < needed or inst.k < needed:
        raise ValidationError(
            f"needs {needed} signals but |S|={inst.num_signals}, k={inst.k}"
        )
    return Scheme.deterministic(mapping)


def _bundle_contributions(inst: Instance, mapping: np.ndarray) -> dict[int, float]:
    """Per-used-signal welfare contribution max_i sum_{j in f^-1(s)} vhat[i, j]."""
    out = {}
    for s in np.unique(mapping):
        members = mapping == s
        out[int(s)] = float(inst.vhat[:, members].sum(axis=1).max())
    return out


def truncate_scheme(inst: Instance, scheme: Scheme, k: int) -> Scheme:
    """Reduce a deterministic scheme to k signals, keeping welfare >= k/l of it.

    Keeps the k signals with the largest welfare contribution (ties to the
    lowest signal index) and reassigns each orphaned item, in item order, to
    the admissible kept signal with the largest marginal welfare gain.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    mapping = scheme.mapping.copy()
    contrib = _bundle_contributions(inst, mapping)
    used = sorted(contrib)
    if k >= len(used):
        return scheme
    ranked = sorted(used, key=lambda s: (-contrib[s], s))
    kept = sorted(ranked[:k])
    kept_set = set(kept)
    # running per-player bundle sums for kept signals
    bundles = {s: inst.vhat[:, mapping == s].sum(axis=1) for s in kept}
    best_vals = {s: float(bundles[s].max()) for s in kept}
    for j in range(inst.m):
        if int(mapping[j]) in kept_set:
            continue
        cands = [s for s in kept if inst.allowed[j, s]]
        if not cands:
            raise ValidationError(
                f"item {j} has no edge to any kept signal; cannot truncate"
            )
        gains = [(float((bundles[s] + inst.vhat[:, j]).max()) - best_vals[s], s) for s in cands]
        gain, target = max(gains, key=lambda t: (t[0], -t[1]))
        mapping[j] = target
        bundles[target] = bundles[target] + inst.vhat[:, j]
        best_vals[target] += gain
    return Scheme.deterministic(mapping)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def instance_to_dict(inst: Instance, meta: dict | None = None) -> dict:
    doc = {
        "m": inst.m,
        "p": inst.p.tolist(),
        "n": inst.n,
        "values": inst.values.tolist(),
        "signals": list(inst.signals),
        "k": inst.k,
    }
    if not inst.complete:
        doc["edges"] = [
            [int(j), inst.signals[int(s)]]
            for j, s in zip(*np.nonzero(inst.allowed))
        ]
    if inst.no_info is not None:
        doc["no_info"] = inst.signals[inst.no_info]
    if meta:
        doc["meta"] = meta
    return doc


def instance_from_dict(doc: dict) -> Instance:
    try:
        return Instance.create(
            p=doc["p"],
            values=doc["values"],
            signals=doc["signals"],
            k=doc["k"],
            edges=doc.get("edges"),
            no_info=doc.get("no_info"),
        )
    except KeyError as exc:
        raise ValidationError(f"instance file missing field {exc}") from None


def dump_instance(inst: Instance, path, meta: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst, meta), fh, indent=1)
        fh.write("\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def scheme_to_dict(inst: Instance, scheme: Scheme) -> dict:
    comps = []
    for c in scheme.components:
        if c.mapping is not None:
            comps.append({
                "weight": c.weight,
                "map": [inst.signals[int(s)] for s in c.mapping],
            })
        else:
            comps.append({
                "weight": c.weight,
                "lottery": {inst.signals[s]: float(q) for s, q in enumerate(c.lottery) if q > 0},
            })
    return {"components": comps}


def scheme_from_dict(inst: Instance, doc: dict) -> Scheme:
    comps = []
    for c in doc.get("components", []):
        w = float(c["weight"])
        if "map" in c:
            mapping = np.array([inst.signal_index(s) for s in c["map"]], dtype=np.int64)
            comps.append(SchemeComponent(w, mapping=_readonly(mapping)))
        elif "lottery" in c:
            q = np.zeros(inst.num_signals)
            for lab, prob in c["lottery"].items():
                q[inst.signal_index(lab)] = float(prob)
            comps.append(SchemeComponent(w, lottery=_readonly(q)))
        else:
            raise ValidationError("scheme component needs 'map' or 'lottery'")
    scheme = Scheme(tuple(comps))
    validate_scheme(inst, scheme)
    return scheme


def dump_scheme(inst: Instance, scheme: Scheme, path) -> None:
    with open(path, "w") as fh:
        json.dump(scheme_to_dict(inst, scheme), fh, indent=1)
        fh.write("\n")


def load_scheme(inst: Instance, path) -> Scheme:
    with open(path) as fh:
        return scheme_from_dict(inst, json.load(fh))
