"""Flat-torus grids, quadrature, region masks and smooth cutoffs.

The torus T^d = Π_i R/(L_i Z) is discretized by a uniform tensor grid with
N_i points per axis. For periodic smooth integrands the uniform quadrature
rule is spectrally accurate, so no fancier rule is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TorusDomain:
    """Uniform periodic grid on a flat torus of real dimension d (2 or 4)."""

    d: int
    sizes: tuple[int, ...]
    lengths: tuple[float, ...]

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def npoints(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def cell_weight(self) -> float:
        """Quadrature weight per grid point: Π (L_i / N_i)."""
        return float(np.prod([L / N for L, N in zip(self.lengths, self.sizes)]))

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.lengths, self.sizes))

    def axis_coords(self, axis: int) -> np.ndarray:
        N = self.sizes[axis]
        return np.arange(N) * (self.lengths[axis] / N)

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for i in range(self.d):
            shape = [1] * self.d
            shape[i] = self.sizes[i]
            out.append(self.axis_coords(i).reshape(shape))
        return out

    def periodic_distance(self, center: tuple[float, ...]) -> np.ndarray:
        """Distance to `center` under the per-axis minimal-image convention."""
        if len(center) != self.d:
            raise DomainError(f"center has {len(center)} coordinates, domain is {self.d}-d")
        acc = np.zeros(self.sizes)
        for i, x in enumerate(self.coords()):
            L = self.lengths[i]
            delta = np.mod(x - center[i] + 0.5 * L, L) - 0.5 * L
            acc = acc + delta**2
        return np.sqrt(acc)


def make_torus(d: int, sizes, lengths) -> TorusDomain:
    if d not in (2, 4):
        raise DomainError(f"grid dimension must be 2 or 4, got {d}")
    sizes = tuple(int(N) for N in sizes)
    lengths = tuple(float(L) for L in lengths)
    if len(sizes) != d or len(lengths) != d:
        raise DomainError(f"need {d} sizes and {d} lengths, got {len(sizes)}/{len(lengths)}")
    for N in sizes:
        if N < 8:
            raise DomainError(f"axis size {N} < 8: too coarse for spectral differentiation")
        if N % 2 != 0:
            raise DomainError(f"axis size {N} is odd: even sizes required")
    for L in lengths:
        if not L > 0:
            raise DomainError(f"axis length {L} must be positive")
    return TorusDomain(d=d, sizes=sizes, lengths=lengths)


@dataclass(eq=False)
class ScalarField:
    """Real-valued grid function on a TorusDomain. Values must stay finite."""

    domain: TorusDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.domain.sizes:
            raise DomainError(
                f"field shape {self.values.shape} does not match grid {self.domain.sizes}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field contains NaN or Inf")

    @classmethod
    def constant(cls, domain: TorusDomain, value: float) -> "ScalarField":
        return cls(domain, np.full(domain.sizes, float(value)))

    @classmethod
    def from_function(cls, domain: TorusDomain, fn) -> "ScalarField":
        return cls(domain, np.broadcast_to(fn(*domain.coords()), domain.sizes).copy())

    def copy(self) -> "ScalarField":
        return ScalarField(self.domain, self.values.copy())

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def min(self) -> float:
        return float(np.min(self.values))

    @property
    def max(self) -> float:
        return float(np.max(self.values))


def integrate(f: ScalarField) -> float:
    """∫ f dμ by uniform quadrature (spectrally accurate for smooth f)."""
    if not np.all(np.isfinite(f.values)):
        raise DomainError("cannot integrate non-finite field")
    return float(np.sum(f.values)) * f.domain.cell_weight


def mean(f: ScalarField) -> float:
    return integrate(f) / f.domain.volume


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Boolean region on a grid (e.g. the negative set of S, or a compact K)."""

    domain: TorusDomain
    mask: np.ndarray = field(hash=False)
    label: str = ""

    def __post_init__(self):
        if self.mask.shape != self.domain.sizes:
            raise DomainError("mask shape does not match grid")

    @property
    def measure(self) -> float:
        return float(np.count_nonzero(self.mask)) * self.domain.cell_weight

    @property
    def empty(self) -> bool:
        return not bool(self.mask.any())

    def contains(self, other: "RegionMask") -> bool:
        """True when `other` is a subset of this mask."""
        return bool(np.all(self.mask[other.mask]))


def sublevel_mask(S: ScalarField, threshold: float, label: str = "") -> RegionMask:
    return RegionMask(S.domain, S.values < threshold, label)


def ball_mask(domain: TorusDomain, center, radius: float, label: str = "") -> RegionMask:
    return RegionMask(domain, domain.periodic_distance(tuple(center)) <= radius, label)


@dataclass(frozen=True)
class CutoffSpec:
    """Radial bump: 1 inside r_inner, 0 outside r_outer, quintic in between."""

    center: tuple[float, ...]
    r_inner: float
    r_outer: float
    profile: str = "quintic"


def make_cutoff(domain: TorusDomain, spec: CutoffSpec) -> ScalarField:
    """C² radial cutoff under the flat periodic distance.

    The quintic smoothstep has vanishing first and second derivatives at
    both ends of the transition band, so Δφ is continuous (needed by the
    maximum-principle sup bound, which evaluates Δφ).
    """
    if spec.profile != "quintic":
        raise DomainError(f"unknown cutoff profile {spec.profile!r}")
    if not (0 < spec.r_inner < spec.r_outer):
        raise DomainError("need 0 < r_inner < r_outer")
    half_min_period = 0.5 * min(domain.lengths)
    if spec.r_outer > half_min_period:
        raise DomainError(
            f"r_outer = {spec.r_outer} exceeds half the shortest period "
            f"{half_min_period}: cutoff would self-overlap through periodicity"
        )
    r = domain.periodic_distance(spec.center)
    # t = 1 at the inner radius, 0 at the outer radius
    t = np.clip((spec.r_outer - r) / (spec.r_outer - spec.r_inner), 0.0, 1.0)
    phi = t**3 * (10.0 - 15.0 * t + 6.0 * t**2)
    return ScalarField(domain, phi)
