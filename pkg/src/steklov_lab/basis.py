"""Harmonic spectral basis on circle domains and the eigensystem matrices.

The trial space is spanned by global harmonic functions with explicit
holomorphic data: the constant, ``Re z^m`` / ``Im z^m`` for the outer circle,
and per hole ``log|z - c_j|`` (carries flux) plus ``Re/Im (r_j/(z - c_j))^m``.
Scaling the hole terms by ``r_j^m`` keeps every trace O(1) on its own circle.

The stiffness matrix is assembled as the boundary integral
``A_ij = cint phi_i  d(phi_j)/d(eta) ds`` which equals the Dirichlet energy
pairing exactly for harmonic functions (Green); the mass matrix and weighted
mean vector come from the same per-circle trapezoid quadrature, which is
spectrally accurate for these analytic integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import BoundaryDensity, BoundaryMeasureSamples, CircleDomain, validate

MAX_DEGREE = 64


class DegreeTooLarge(ValueError):
    pass


def _quad_size(M: int) -> int:
    """Quadrature points per circle: >= max(256, 8M), rounded up to a power of two."""
    n = max(256, 8 * M)
    p = 1
    while p < n:
        p *= 2
    return p


class HarmonicBasis:
    """Harmonic trial functions on a circle domain, degree M per boundary circle.

    Element order: constant; (Re z^m, Im z^m) for m = 1..M; then per hole
    log|z-c_j| followed by (Re w^m, Im w^m) with w = r_j/(z-c_j).  Size is
    1 + 2M + holes*(1 + 2M).
    """

    def __init__(self, domain: CircleDomain, M: int):
        if not (1 <= M <= MAX_DEGREE):
            raise DegreeTooLarge(f"degree M={M} outside [1, {MAX_DEGREE}]")
        validate(domain)
        self.domain = domain
        self.M = M
        self.n_quad = _quad_size(M)
        # (kind, j, m, part):  kind in {const, outer, hole_log, hole}; part 0=Re 1=Im
        elements = [("const", -1, 0, 0)]
        for m in range(1, M + 1):
            elements.append(("outer", -1, m, 0))
            elements.append(("outer", -1, m, 1))
        for j in range(len(domain.holes)):
            elements.append(("hole_log", j, 0, 0))
            for m in range(1, M + 1):
                elements.append(("hole", j, m, 0))
                elements.append(("hole", j, m, 1))
        self.elements = elements
        self._trace_cache: dict[int, np.ndarray] = {}
        self._dnu_cache: dict[int, np.ndarray] = {}
        self._dirichlet: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.elements)

    def thetas(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_quad) / self.n_quad

    def circle_points(self, j: int) -> np.ndarray:
        c = self.domain.component_center(j)
        rho = self.domain.component_radius(j)
        return c + rho * np.exp(1j * self.thetas())

    def circle_normals(self, j: int) -> np.ndarray:
        """Outward unit normal of the domain as a complex number per node."""
        nu = np.exp(1j * self.thetas())
        return nu if j == 0 else -nu

    def ds_weight(self, j: int) -> float:
        """Arclength weight per node on circle j."""
        return self.domain.component_radius(j) * 2.0 * math.pi / self.n_quad

    # -- pointwise evaluation -------------------------------------------------

    def _holomorphic_parts(self, z: np.ndarray):
        """Value and d/dz data for all elements at points z.

        Returns (vals, dz) with shape (size, len(z)); vals real, dz complex
        holding d(element)/dz (Wirtinger), so grad = 2*(Re dz, -Im dz).
        """
        z = np.asarray(z, dtype=complex)
        vals = np.empty((self.size, z.size))
        dz = np.empty((self.size, z.size), dtype=complex)
        zf = z.ravel()
        for i, (kind, j, m, part) in enumerate(self.elements):
            if kind == "const":
                vals[i] = 1.0
                dz[i] = 0.0
                continue
            if kind == "outer":
                F = zf**m
                dF = m * zf ** (m - 1)
            elif kind == "hole_log":
                h = self.domain.holes[j]
                F = np.log(np.abs(zf - h.center)) + 0j
                dF = 1.0 / (zf - h.center)
                # F here holds the real value; imaginary part unused
                vals[i] = F.real
                dz[i] = dF / 2.0
                continue
            else:  # hole
                h = self.domain.holes[j]
                w = h.radius / (zf - h.center)
                F = w**m
                dF = -(m / h.radius) * w ** (m + 1)
            if part == 0:
                vals[i] = F.real
                dz[i] = dF / 2.0
            else:
                vals[i] = F.imag
                dz[i] = -1j * dF / 2.0
        return vals, dz

    def values_at(self, z: np.ndarray) -> np.ndarray:
        """Element values at arbitrary points, shape (size, npts)."""
        return self._holomorphic_parts(z)[0]

    def dz_at(self, z: np.ndarray) -> np.ndarray:
        """Wirtinger d/dz of each element, shape (size, npts) complex."""
        return self._holomorphic_parts(z)[1]

    def gradients_at(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(du/dx, du/dy) arrays of shape (size, npts)."""
        dz = self.dz_at(z)
        return 2.0 * dz.real, -2.0 * dz.imag

    # -- cached boundary data -------------------------------------------------

    def traces(self, j: int) -> np.ndarray:
        """Values of every element on circle j's quadrature nodes, (size, n_quad)."""
        if j not in self._trace_cache:
            self._trace_cache[j] = self.values_at(self.circle_points(j))
        return self._trace_cache[j]

    def normal_derivatives(self, j: int) -> np.ndarray:
        """d(element)/d(eta) on circle j's nodes, eta the outward domain normal."""
        if j not in self._dnu_cache:
            dz = self.dz_at(self.circle_points(j))
            eta = self.circle_normals(j)
            # for u = Re F: du/d(eta) = Re(F' * eta); dz holds F'/2 (or the
            # rotated variant for Im parts), and the same algebra applies
            self._dnu_cache[j] = 2.0 * (dz * eta[None, :]).real
        return self._dnu_cache[j]

    def density_on_circle(self, j: int, density) -> np.ndarray:
        """lambda at circle j's quadrature nodes for either weight representation."""
        th = self.thetas()
        if isinstance(density, BoundaryMeasureSamples):
            return density.density_values(j, th)
        if isinstance(density, BoundaryDensity):
            return density.values(j, th)
        raise TypeError(f"unsupported density type {type(density)!r}")


@dataclass(frozen=True)
class EigenSystemMatrices:
    """Stiffness A, weighted boundary mass B, and weighted mean vector m."""

    A: np.ndarray
    B: np.ndarray
    m: np.ndarray


def build_basis(domain: CircleDomain, M: int) -> HarmonicBasis:
    return HarmonicBasis(domain, M)


def dirichlet_matrix(basis: HarmonicBasis) -> np.ndarray:
    """Dirichlet energy Gram matrix via the boundary flux pairing, symmetrized."""
    if basis._dirichlet is not None:
        return basis._dirichlet
    n = basis.size
    A = np.zeros((n, n))
    for j in range(basis.domain.k):
        P = basis.traces(j)
        D = basis.normal_derivatives(j)
        A += basis.ds_weight(j) * (P @ D.T)
    basis._dirichlet = 0.5 * (A + A.T)
    return basis._dirichlet


def boundary_matrices(basis: HarmonicBasis, density) -> EigenSystemMatrices:
    """A, B, m for the weighted Steklov eigensystem A x = sigma B x."""
    n = basis.size
    A = dirichlet_matrix(basis)
    B = np.zeros((n, n))
    mvec = np.zeros(n)
    for j in range(basis.domain.k):
        P = basis.traces(j)
        lam = basis.density_on_circle(j, density)
        w = lam * basis.ds_weight(j)
        B += (P * w[None, :]) @ P.T
        mvec += P @ w
    B = 0.5 * (B + B.T)
    return EigenSystemMatrices(A=A, B=B, m=mvec)
