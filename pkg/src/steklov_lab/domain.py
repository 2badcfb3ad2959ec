"""Circle domains (unit disk minus round holes) and weighted boundary measures.

A domain is the open unit disk with ``k - 1`` closed disjoint circular holes
removed; its boundary has ``k`` circle components indexed 0 (outer unit
circle) then the holes in order.  Boundary weights are stored either as a
truncated Fourier series of ``log(lambda)`` per component (``BoundaryDensity``)
or as equispaced samples of the measure density ``lambda * rho`` with respect
to the angle variable (``BoundaryMeasureSamples``).  Heat smoothing acts on a
measure as the exact Fourier multiplier of the circle heat kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HOLE_MARGIN = 1e-6


class DomainError(ValueError):
    pass


class RadiusNonpositive(DomainError):
    pass


class HoleOutsideDisk(DomainError):
    pass


class Overlap(DomainError):
    pass


@dataclass(frozen=True)
class Hole:
    center: complex
    radius: float


@dataclass(frozen=True)
class CircleDomain:
    """Unit disk minus disjoint round holes; boundary component 0 is the unit circle."""

    holes: tuple[Hole, ...] = ()

    def __post_init__(self):
        validate(self)

    @property
    def k(self) -> int:
        """Number of boundary components."""
        return 1 + len(self.holes)

    def component_center(self, j: int) -> complex:
        return 0j if j == 0 else self.holes[j - 1].center

    def component_radius(self, j: int) -> float:
        return 1.0 if j == 0 else self.holes[j - 1].radius

    def radii(self) -> np.ndarray:
        return np.array([self.component_radius(j) for j in range(self.k)])

    def contains(self, z: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Boolean mask of points inside the domain with clearance ``margin``."""
        z = np.asarray(z, dtype=complex)
        inside = np.abs(z) <= 1.0 - margin
        for h in self.holes:
            inside &= np.abs(z - h.center) >= h.radius + margin
        return inside


def validate(domain: CircleDomain) -> None:
    """Raise a DomainError unless holes are disjoint and inside the disk.

    Closed holes must sit in the open unit disk and keep pairwise distance,
    both with clearance ``HOLE_MARGIN``.
    """
    for h in domain.holes:
        if not (h.radius > 0.0):
            raise RadiusNonpositive(f"hole radius {h.radius} must be positive")
        if abs(h.center) + h.radius > 1.0 - HOLE_MARGIN:
            raise HoleOutsideDisk(
                f"hole at {h.center} radius {h.radius} leaves the unit disk"
            )
    hs = domain.holes
    for i in range(len(hs)):
        for j in range(i + 1, len(hs)):
            gap = abs(hs[i].center - hs[j].center) - hs[i].radius - hs[j].radius
            if gap < HOLE_MARGIN:
                raise Overlap(f"holes {i} and {j} overlap (gap {gap:.2e})")


@dataclass(frozen=True)
class BoundaryDensity:
    """Truncated Fourier series of log(lambda) on each boundary circle.

    ``log_coeffs[j] = (c0, a1, b1, a2, b2, ...)`` encodes
    ``log lambda(theta) = c0 + sum_m (a_m cos(m theta) + b_m sin(m theta))``
    in the angle variable of component j.  Positivity of lambda is automatic.
    """

    log_coeffs: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        for c in self.log_coeffs:
            if len(c) % 2 != 1:
                raise ValueError("coefficient lists must have odd length (c0,a1,b1,...)")

    @classmethod
    def uniform(cls, k: int) -> "BoundaryDensity":
        return cls(tuple((0.0,) for _ in range(k)))

    @property
    def k(self) -> int:
        return len(self.log_coeffs)

    def log_values(self, j: int, thetas: np.ndarray) -> np.ndarray:
        c = self.log_coeffs[j]
        out = np.full_like(np.asarray(thetas, dtype=float), c[0])
        for m in range(1, (len(c) + 1) // 2):
            out += c[2 * m - 1] * np.cos(m * thetas)
            if 2 * m < len(c):
                out += c[2 * m] * np.sin(m * thetas)
        return out

    def values(self, j: int, thetas: np.ndarray) -> np.ndarray:
        return np.exp(self.log_values(j, thetas))

    def shifted(self, delta_c0: float) -> "BoundaryDensity":
        """Add the same constant to every component's c0 (global rescale)."""
        return BoundaryDensity(
            tuple((c[0] + delta_c0,) + tuple(c[1:]) for c in self.log_coeffs)
        )


@dataclass(frozen=True)
class BoundaryMeasureSamples:
    """Equispaced samples of the measure density d(mu)/d(theta) per component.

    values[j][i] = lambda(theta_i) * rho_j at theta_i = 2*pi*i/N_j; every N_j
    is a power of two.  radii[j] is the euclidean radius of the circle, needed
    to convert back to lambda and to set the physical smoothing scale.
    """

    values: tuple[np.ndarray, ...]
    radii: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.radii):
            raise ValueError("values and radii must align")
        for v in self.values:
            n = len(v)
            if n < 4 or (n & (n - 1)) != 0:
                raise ValueError("grid sizes must be powers of two (>= 4)")

    @property
    def k(self) -> int:
        return len(self.values)

    def thetas(self, j: int) -> np.ndarray:
        n = len(self.values[j])
        return 2.0 * math.pi * np.arange(n) / n

    def mass(self, j: int) -> float:
        """Total measure of component j (periodic trapezoid, exact for trig polys)."""
        v = self.values[j]
        return 2.0 * math.pi * float(np.mean(v))

    def total_mass(self) -> float:
        return sum(self.mass(j) for j in range(self.k))

    def density_values(self, j: int, thetas: np.ndarray | None = None) -> np.ndarray:
        """lambda on component j, resampled by trigonometric interpolation if needed."""
        lam = self.values[j] / self.radii[j]
        if thetas is None:
            return lam
        return _trig_resample(lam, np.asarray(thetas, dtype=float))

    def scaled(self, factor: float) -> "BoundaryMeasureSamples":
        return BoundaryMeasureSamples(
            tuple(v * factor for v in self.values), self.radii
        )


def _trig_resample(vals: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Evaluate the band-limited interpolant of equispaced samples at thetas."""
    n = len(vals)
    if thetas.shape == (n,):
        native = 2.0 * math.pi * np.arange(n) / n
        if np.array_equal(thetas, native):
            return vals.copy()
    coeff = np.fft.rfft(vals) / n
    out = np.full(thetas.shape, coeff[0].real)
    for m in range(1, len(coeff)):
        w = 2.0 if 2 * m < n else 1.0  # Nyquist mode counted once
        out += w * (coeff[m].real * np.cos(m * thetas) - coeff[m].imag * np.sin(m * thetas))
    return out


def sample_measure(
    domain: CircleDomain, density: BoundaryDensity, n: int = 256
) -> BoundaryMeasureSamples:
    """Sample lambda * rho on an n-point grid per component."""
    if density.k != domain.k:
        raise ValueError("density has wrong number of components")
    vals = []
    for j in range(domain.k):
        th = 2.0 * math.pi * np.arange(n) / n
        vals.append(density.values(j, th) * domain.component_radius(j))
    return BoundaryMeasureSamples(tuple(vals), tuple(domain.radii()))


def boundary_length(domain: CircleDomain, density) -> float:
    """Weighted boundary length  L = sum_j  cint lambda ds  over all components."""
    if isinstance(density, BoundaryMeasureSamples):
        return density.total_mass()
    L = 0.0
    n = 256
    th = 2.0 * math.pi * np.arange(n) / n
    for j in range(domain.k):
        rho = domain.component_radius(j)
        # ds = rho d(theta); equispaced trapezoid is spectrally exact here
        L += rho * 2.0 * math.pi * float(np.mean(density.values(j, th)))
    return L


def heat_smooth(density, eps: float, domain: CircleDomain | None = None,
                n: int = 256) -> BoundaryMeasureSamples:
    """Heat-kernel smoothing of a boundary measure at time eps.

    Acts per component as the exact multiplier exp(-(2 pi m / ell)^2 eps) on
    the Fourier coefficients of the measure, where ell = 2 pi rho is the
    euclidean circumference.  Mass is preserved exactly; eps = 0 is the
    identity.  Accepts a BoundaryDensity (domain required) or samples.
    """
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    if isinstance(density, BoundaryDensity):
        if domain is None:
            raise ValueError("domain required to smooth a BoundaryDensity")
        density = sample_measure(domain, density, n)
    out = []
    for j in range(density.k):
        v = density.values[j]
        rho = density.radii[j]
        coeff = np.fft.rfft(v)
        m = np.arange(len(coeff))
        coeff *= np.exp(-((m / rho) ** 2) * eps)
        out.append(np.fft.irfft(coeff, n=len(v)))
    return BoundaryMeasureSamples(tuple(out), density.radii)


def normalize(domain: CircleDomain, density):
    """Rescale a boundary weight so the total weighted length is 1.

    Returns the same representation that was passed in; idempotent.
    """
    L = boundary_length(domain, density)
    if not (L > 0.0):
        raise DomainError("degenerate measure: nonpositive total mass")
    if isinstance(density, BoundaryMeasureSamples):
        return density.scaled(1.0 / L)
    return density.shifted(-math.log(L))


def domain_to_json(domain: CircleDomain, density: BoundaryDensity | None = None) -> dict:
    doc = {
        "holes": [
            {"cx": h.center.real, "cy": h.center.imag, "r": h.radius}
            for h in domain.holes
        ]
    }
    if density is not None:
        doc["log_density"] = [list(c) for c in density.log_coeffs]
    return doc


def domain_from_json(doc: dict) -> tuple[CircleDomain, BoundaryDensity]:
    holes = tuple(
        Hole(complex(h["cx"], h["cy"]), float(h["r"])) for h in doc.get("holes", [])
    )
    domain = CircleDomain(holes)
    if "log_density" in doc:
        density = BoundaryDensity(tuple(tuple(map(float, c)) for c in doc["log_density"]))
        if density.k != domain.k:
            raise DomainError("log_density component count does not match holes")
    else:
        density = BoundaryDensity.uniform(domain.k)
    return domain, density
