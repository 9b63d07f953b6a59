"""Instance construction: max-cover reduction, seeded random instances,
geometric samplers, and the max-cover line format.

Everything here is a pure function of (parameters, seed); the PRNG is
numpy's PCG64 throughout, recorded in generated instance files under the
"meta" key.
"""

from dataclasses import dataclass

import numpy as np

from .core import Instance, Scheme
from .errors import ValidationError

PRNG_NAME = "numpy-pcg64"


@dataclass(frozen=True)
class MaxCoverSpec:
    """A max-cover instance: ground set [m], subsets, and a budget k."""

    m: int
    sets: tuple[tuple[int, ...], ...]
    k: int

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("ground set must be nonempty")
        if not 1 <= self.k <= len(self.sets):
            raise ValidationError(f"need 1 <= k <= n, got k={self.k}, n={len(self.sets)}")
        for idx, members in enumerate(self.sets):
            for j in members:
                if not 0 <= j < self.m:
                    raise ValidationError(f"set {idx} contains {j}, outside [0, {self.m})")

    @property
    def n(self) -> int:
        return len(self.sets)


def from_max_cover(spec: MaxCoverSpec) -> Instance:
    """Reduction to signaling: uniform items, 0/1 values v_i(j) = [j in A_i]."""
    values = np.zeros((spec.n, spec.m))
    for i, members in enumerate(spec.sets):
        for j in members:
            values[i, j] = 1.0
    return Instance.create(
        p=np.full(spec.m, 1.0 / spec.m),
        values=values,
        signals=[f"s{i}" for i in range(spec.k)],
        k=spec.k,
    )


def cover_to_scheme(spec: MaxCoverSpec, chosen: list[int]) -> Scheme:
    """Scheme realizing a cover: items of A_{i1} to signal 0, new items of
    A_{i2} to signal 1, and so on; uncovered items join signal 0."""
    inst_k = spec.k
    if len(chosen) > inst_k:
        raise ValidationError("cover uses more sets than the budget")
    mapping = np.zeros(spec.m, dtype=np.int64)
    seen: set[int] = set()
    for slot, i in enumerate(chosen):
        for j in spec.sets[i]:
            if j not in seen:
                mapping[j] = slot
                seen.add(j)
    return Scheme.deterministic(mapping)


def scheme_to_cover(spec: MaxCoverSpec, inst: Instance, scheme: Scheme) -> list[int]:
    """Extract a cover from a deterministic scheme: each signal's winner."""
    mapping = scheme.mapping
    chosen = []
    for s in np.unique(mapping):
        members = mapping == s
        winner = int(np.argmax(inst.vhat[:, members].sum(axis=1)))
        chosen.append(winner)
    return chosen[: spec.k]


def parse_max_cover(text: str) -> MaxCoverSpec:
    """Line format: first line "m n k", then one line of item indices per set."""
    lines = text.splitlines()
    if not lines:
        raise ValidationError("empty max-cover spec")
    try:
        m, n, k = (int(x) for x in lines[0].split())
    except ValueError:
        raise ValidationError("first line must be 'm n k'") from None
    if len(lines) < 1 + n:
        raise ValidationError(f"expected {n} set lines, found {len(lines) - 1}")
    sets = []
    for line in lines[1 : 1 + n]:
        sets.append(tuple(int(x) for x in line.split()))
    return MaxCoverSpec(m=m, sets=tuple(sets), k=k)


def format_max_cover(spec: MaxCoverSpec) -> str:
    lines = [f"{spec.m} {spec.n} {spec.k}"]
    for members in spec.sets:
        lines.append(" ".join(str(j) for j in members))
    return "\n".join(lines) + "\n"


def random_cover_spec(m: int, n: int, k: int, seed: int, density: float = 0.4,
                      nonempty: bool = True) -> MaxCoverSpec:
    rng = np.random.default_rng(seed)
    sets = []
    for _ in range(n):
        members = tuple(int(j) for j in np.flatnonzero(rng.random(m) < density))
        if nonempty and not members:
            members = (int(rng.integers(m)),)
        sets.append(members)
    return MaxCoverSpec(m=m, sets=tuple(sets), k=k)


def simplex_point(rng: np.random.Generator, m: int) -> np.ndarray:
    """Uniform point on the simplex via sorted-uniform spacings."""
    if m == 1:
        return np.ones(1)
    cuts = np.sort(rng.random(m - 1))
    return np.diff(np.concatenate(([0.0], cuts, [1.0])))


def random_instance(m: int, n: int, num_signals: int, k: int, seed: int,
                    value_dist: str = "uniform01", bernoulli_q: float = 0.5,
                    edge_density: float | None = None) -> Instance:
    """Seeded random instance; complete edges unless edge_density is given.

    With an edge density, signal 0 becomes the universally-connected
    no-information signal and the remaining edges are kept independently
    with the stated probability.
    """
    if min(m, n, num_signals, k) < 1:
        raise ValidationError("sizes must be positive")
    rng = np.random.default_rng(seed)
    p = simplex_point(rng, m)
    if value_dist == "uniform01":
        values = rng.random((n, m))
    elif value_dist == "bernoulli":
        values = (rng.random((n, m)) < bernoulli_q).astype(float)
    else:
        raise ValidationError(f"unknown value_dist {value_dist!r}")
    edges = None
    no_info = None
    if edge_density is not None:
        edges = rng.random((m, num_signals)) < edge_density
        edges[:, 0] = True
        no_info = 0
    elif k < num_signals:
        no_info = 0
    return Instance.create(
        p=p,
        values=values,
        signals=[f"s{i}" for i in range(num_signals)],
        k=k,
        edges=edges,
        no_info=no_info,
    )


def random_scheme(inst: Instance, seed: int, max_components: int = 4,
                  allow_lottery: bool | None = None) -> Scheme:
    """Random valid scheme: a mixture of maps confined to <= k signals."""
    rng = np.random.default_rng(seed)
    if allow_lottery is None:
        allow_lottery = inst.complete
    # fix a signal subset of size <= k that keeps every item feasible
    S = inst.num_signals
    order = [int(s) for s in rng.permutation(S)]
    if inst.no_info is not None and inst.no_info not in order[: inst.k]:
        order.remove(inst.no_info)
        order.insert(0, inst.no_info)
    subset = sorted(order[: inst.k])
    if not inst.allowed[:, subset].any(axis=1).all():
        raise ValidationError("no feasible signal subset of size k found")
    ncomp = int(rng.integers(1, max_components + 1))
    weights = simplex_point(rng, ncomp)
    parts = []
    for c in range(ncomp):
        if allow_lottery and ncomp > 1 and rng.random() < 0.3:
            q = np.zeros(S)
            q[subset] = simplex_point(rng, len(subset))
            parts.append((weights[c], q))
        else:
            mapping = np.empty(inst.m, dtype=np.int64)
            for j in range(inst.m):
                options = [s for s in subset if inst.allowed[j, s]]
                mapping[j] = options[int(rng.integers(len(options)))]
            parts.append((weights[c], mapping))
    return Scheme.mixture(parts)


@dataclass(frozen=True)
class InnerProductSample:
    """A good on the l1 simplex plus valuation vectors in the l-inf ball."""

    omega: np.ndarray        # (d,)
    valuations: np.ndarray   # (n, d)


@dataclass(frozen=True)
class SubspaceSample:
    """A unit good plus per-player orthonormal bases (each (l_i, d))."""

    omega: np.ndarray
    bases: tuple[np.ndarray, ...]


def random_geometric(d: int, n: int, seed: int, mode: str = "inner_product",
                     k: int | None = None, nonneg: bool = False):
    """Seeded geometric sample for the bounded-communication schemes.

    inner_product: omega uniform on the l1 simplex, valuations entrywise
    uniform in [-1, 1] (or [0, 1] with nonneg).  subspace: omega uniform on
    the unit sphere, per-player orthonormal bases of dimension 1..k.
    """
    if min(d, n) < 1:
        raise ValidationError("sizes must be positive")
    rng = np.random.default_rng(seed)
    if mode == "inner_product":
        omega = simplex_point(rng, d)
        lo = 0.0 if nonneg else -1.0
        vals = rng.uniform(lo, 1.0, size=(n, d))
        return InnerProductSample(omega=omega, valuations=vals)
    if mode == "subspace":
        if k is None or k < 1:
            raise ValidationError("subspace mode needs k >= 1")
        g = rng.standard_normal(d)
        omega = g / np.linalg.norm(g)
        bases = []
        for _ in range(n):
            ell = int(rng.integers(1, k + 1))
            raw = rng.standard_normal((ell, d))
            q, _ = np.linalg.qr(raw.T)
            bases.append(q.T[:ell].copy())
        return SubspaceSample(omega=omega, bases=tuple(bases))
    raise ValidationError(f"unknown mode {mode!r}")
