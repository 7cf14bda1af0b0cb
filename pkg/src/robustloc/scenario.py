"""Synthetic deployments: anchors, near/far targets and distance corruption."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, SamplingExhaustedError
from .geometry import AnchorSet, squared_distance_matrix
from .linalg import kmeans

MAX_ATTEMPTS = 100_000


@dataclass(frozen=True)
class Box:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise DomainError(f"degenerate box {self}")

    def sample(self, rng, size=None):
        x = rng.uniform(self.xmin, self.xmax, size)
        y = rng.uniform(self.ymin, self.ymax, size)
        return np.stack([x, y], axis=-1)


@dataclass(frozen=True)
class RegionSpec:
    near_box: Box = Box(-400.0, 400.0, -400.0, 400.0)
    far_boxes: tuple = (Box(-1200.0, -1000.0, -600.0, 400.0), Box(1200.0, 1400.0, -600.0, 400.0))
    min_separation: float = 60.0
    near_count: int = 50
    far_count_per_box: int = 50
    kmeans_cloud: int = 1000
    placement: str = "filter"

    def __post_init__(self):
        if not self.min_separation > 0:
            raise DomainError("min_separation must be positive")
        if self.placement not in ("filter", "reject"):
            raise DomainError(f"placement must be 'filter' or 'reject', got {self.placement!r}")
        if self.near_count < 0 or self.far_count_per_box < 0:
            raise DomainError("target counts must be nonnegative")
        object.__setattr__(self, "far_boxes", tuple(self.far_boxes))

    @classmethod
    def from_dict(cls, d: dict) -> "RegionSpec":
        d = dict(d)
        if "near_box" in d:
            d["near_box"] = Box(*d["near_box"]) if not isinstance(d["near_box"], dict) else Box(**d["near_box"])
        if "far_boxes" in d:
            d["far_boxes"] = tuple(Box(**b) if isinstance(b, dict) else Box(*b) for b in d["far_boxes"])
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Scenario:
    anchors: AnchorSet
    near_targets: np.ndarray
    far_targets: np.ndarray
    seed: int | None = None

    @property
    def targets(self) -> np.ndarray:
        """All targets, near ones first; columns of F follow this order."""
        return np.vstack([self.near_targets.reshape(-1, 2), self.far_targets.reshape(-1, 2)])

    @property
    def far_indices(self) -> np.ndarray:
        n_near = len(self.near_targets)
        return np.arange(n_near, n_near + len(self.far_targets))

    @property
    def zones(self) -> list:
        return ["near"] * len(self.near_targets) + ["far"] * len(self.far_targets)


@dataclass(frozen=True)
class CorruptionSpec:
    alpha: int = 4
    k: int = 3
    normal_range: tuple = (0.0, 0.0)
    severe_range: tuple = (0.2, 0.25)
    central_may_corrupt: bool = True

    def __post_init__(self):
        a, b = self.normal_range
        c, d = self.severe_range
        if not (0 <= a <= b and 0 <= c <= d):
            raise DomainError(f"invalid corruption ranges {self.normal_range}, {self.severe_range}")
        if self.alpha < 0 or self.k < 0:
            raise DomainError("alpha and k must be nonnegative")
        object.__setattr__(self, "normal_range", (float(a), float(b)))
        object.__setattr__(self, "severe_range", (float(c), float(d)))


@dataclass(frozen=True)
class CorruptedData:
    F_tilde: np.ndarray
    F_clean: np.ndarray
    truth_corrupted_nodes: tuple
    truth_corrupted_anchors: tuple
    seed: int | None = None
    model: dict = field(default_factory=dict)


def _place(rng, box: Box, count: int, placed: list, min_sep: float, what: str, mode: str) -> np.ndarray:
    """Sequentially place candidates that keep ``min_sep`` from everything placed.

    ``filter`` draws exactly ``count`` candidates and drops the ones that are
    too close, so fewer than ``count`` may survive (but at least one). ``reject`` keeps drawing
    until ``count`` are placed or the attempt budget runs out.
    """
    out = []
    attempts = 0
    sep2 = min_sep**2
    existing = np.array(placed, dtype=float).reshape(-1, 2)
    budget = count if mode == "filter" else MAX_ATTEMPTS
    while len(out) < count:
        if attempts >= budget:
            if mode == "filter":
                if not out:
                    raise SamplingExhaustedError(f"no {what} target survived the separation filter")
                break
            raise SamplingExhaustedError(
                f"placed {len(out)}/{count} {what} targets after {MAX_ATTEMPTS} attempts"
            )
        attempts += 1
        p = box.sample(rng)
        if existing.size and np.min(np.sum((existing - p) ** 2, axis=1)) < sep2:
            continue
        out.append(p)
        existing = np.vstack([existing, p])
    placed.extend(out)
    return np.array(out, dtype=float).reshape(-1, 2)


def generate_scenario(spec: RegionSpec, m: int, seed: int) -> Scenario:
    """Anchors from K-means on a uniform cloud, then separated near/far targets.

    The last K-means center is the central anchor. Near targets are placed
    first, then each far box in turn; a candidate is kept only if it is at
    least ``min_separation`` from every anchor and every target placed so far
    (see ``RegionSpec.placement`` for what happens to rejected candidates).
    """
    if m < 4:
        raise DomainError(f"need at least 4 anchors, got {m}")
    rng = np.random.default_rng(seed)
    cloud = spec.near_box.sample(rng, spec.kmeans_cloud)
    centers = kmeans(cloud, m, seed)
    anchors = AnchorSet(centers, central_index=m - 1)
    placed = list(centers)
    near = _place(rng, spec.near_box, spec.near_count, placed, spec.min_separation, "near", spec.placement)
    far = [
        _place(rng, box, spec.far_count_per_box, placed, spec.min_separation, "far", spec.placement)
        for box in spec.far_boxes
    ]
    far = np.vstack(far) if far else np.zeros((0, 2))
    return Scenario(anchors=anchors, near_targets=near, far_targets=far, seed=seed)


def corrupt_multiplicative(scenario: Scenario, spec: CorruptionSpec, seed: int) -> CorruptedData:
    """Scale squared distances by ``1 + U(a, b)``; severe nodes get ``U(c, d)``.

    ``alpha`` far targets are chosen as severely corrupted. For each of them a
    random ``k``-subset of anchors (the central anchor included only when
    ``central_may_corrupt``) uses the severe range instead of the normal one.
    """
    anchors = scenario.anchors
    far = scenario.far_indices
    if spec.alpha > far.size:
        raise DomainError(f"alpha={spec.alpha} exceeds the {far.size} far targets")
    pool = np.arange(anchors.m) if spec.central_may_corrupt else anchors.others
    if spec.k > pool.size:
        raise DomainError(f"k={spec.k} exceeds the {pool.size} eligible anchors")
    rng = np.random.default_rng(seed)
    F = squared_distance_matrix(anchors, scenario.targets)
    a, b = spec.normal_range
    c, d = spec.severe_range
    Ft = F * (1.0 + rng.uniform(a, b, F.shape))
    nodes = np.sort(rng.choice(far, spec.alpha, replace=False)) if spec.alpha else np.array([], int)
    bad_anchors = []
    for i in nodes:
        js = np.sort(rng.choice(pool, spec.k, replace=False))
        Ft[js, i] = F[js, i] * (1.0 + rng.uniform(c, d, spec.k))
        bad_anchors.append(tuple(int(j) for j in js))
    return CorruptedData(
        F_tilde=Ft,
        F_clean=F,
        truth_corrupted_nodes=tuple(int(i) for i in nodes),
        truth_corrupted_anchors=tuple(bad_anchors),
        seed=seed,
        model={"kind": "multiplicative", **asdict(spec)},
    )


def corrupt_additive_mixture(
    scenario: Scenario,
    beta: float,
    sigma: float,
    a: float,
    b: float,
    seed: int,
    *,
    alpha: int = 4,
    mode: str = "convex",
) -> CorruptedData:
    """Add ``nu = (1 - beta) N(0, sigma^2) + beta U(a, b)`` to every distance.

    ``mode="convex"`` draws both terms for each entry and mixes them with the
    weights above. ``mode="bernoulli"`` instead takes the uniform draw with
    probability ``beta`` and the Gaussian one otherwise. Noisy distances are
    clamped at zero before squaring. ``alpha`` far targets are recorded as the
    evaluation set; every entry of every target is perturbed.
    """
    if not 0 <= beta <= 1:
        raise DomainError(f"beta must be in [0, 1], got {beta}")
    if sigma < 0 or a > b:
        raise DomainError(f"need sigma >= 0 and a <= b, got sigma={sigma}, a={a}, b={b}")
    if mode not in ("convex", "bernoulli"):
        raise DomainError(f"unknown mixture mode {mode!r}")
    far = scenario.far_indices
    if alpha > far.size:
        raise DomainError(f"alpha={alpha} exceeds the {far.size} far targets")
    rng = np.random.default_rng(seed)
    F = squared_distance_matrix(scenario.anchors, scenario.targets)
    gauss = rng.normal(0.0, sigma, F.shape)
    unif = rng.uniform(a, b, F.shape)
    if mode == "convex":
        nu = (1.0 - beta) * gauss + beta * unif
        outlier = np.full(F.shape, beta > 0 and b - a > 0)
    else:
        outlier = rng.random(F.shape) < beta
        nu = np.where(outlier, unif, gauss)
    D = np.maximum(np.sqrt(F) + nu, 0.0)
    Ft = np.where(nu == 0.0, F, D**2)
    nodes = np.sort(rng.choice(far, alpha, replace=False)) if alpha else np.array([], int)
    return CorruptedData(
        F_tilde=Ft,
        F_clean=F,
        truth_corrupted_nodes=tuple(int(i) for i in nodes),
        truth_corrupted_anchors=tuple(tuple(int(j) for j in np.flatnonzero(outlier[:, i])) for i in nodes),
        seed=seed,
        model={"kind": "additive", "beta": beta, "sigma": sigma, "a": a, "b": b, "alpha": alpha, "mode": mode},
    )


# JSON replay

def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "anchors": scenario.anchors.positions.tolist(),
        "central_index": scenario.anchors.central_index,
        "near_targets": scenario.near_targets.tolist(),
        "far_targets": scenario.far_targets.tolist(),
        "seed": scenario.seed,
    }


def scenario_from_dict(d: dict) -> Scenario:
    return Scenario(
        anchors=AnchorSet(np.array(d["anchors"], dtype=float), central_index=d.get("central_index", -1)),
        near_targets=np.array(d.get("near_targets", []), dtype=float).reshape(-1, 2),
        far_targets=np.array(d.get("far_targets", []), dtype=float).reshape(-1, 2),
        seed=d.get("seed"),
    )


def corrupted_to_dict(data: CorruptedData) -> dict:
    return {
        "F_tilde": data.F_tilde.tolist(),
        "F_clean": data.F_clean.tolist(),
        "truth_corrupted_nodes": list(data.truth_corrupted_nodes),
        "truth_corrupted_anchors": [list(a) for a in data.truth_corrupted_anchors],
        "seed": data.seed,
        "model": data.model,
    }


def corrupted_from_dict(d: dict) -> CorruptedData:
    return CorruptedData(
        F_tilde=np.array(d["F_tilde"], dtype=float),
        F_clean=np.array(d["F_clean"], dtype=float),
        truth_corrupted_nodes=tuple(d.get("truth_corrupted_nodes", ())),
        truth_corrupted_anchors=tuple(tuple(a) for a in d.get("truth_corrupted_anchors", ())),
        seed=d.get("seed"),
        model=d.get("model", {}),
    )
