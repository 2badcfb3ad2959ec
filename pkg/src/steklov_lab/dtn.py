"""Weighted Steklov spectra on circle domains by Rayleigh-Ritz.

``steklov_spectrum`` assembles the harmonic-basis matrices and solves the
generalized symmetric problem ``A x = sigma B x`` on the B-orthogonal
complement of the constant: B is factored by pivoted Cholesky, columns whose
pivot falls below a relative threshold are dropped (stability over
completeness at fixed degree), the problem is whitened to standard form, and
the constant direction is deflated exactly so sigma_0 = 0 is returned with the
constant eigenvector.  All returned eigenvalues are Rayleigh-Ritz upper bounds
of the true Steklov eigenvalues and decrease as the degree M grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import dpstrf

from .basis import HarmonicBasis, boundary_matrices, build_basis
from .domain import CircleDomain, boundary_length

DROP_TOL = 1e-10
CLUSTER_TOL = 1e-6


class MassMatrixDegenerate(ValueError):
    pass


class ConditioningFailure(RuntimeError):
    pass


class IndexOutOfRange(IndexError):
    pass


@dataclass
class SteklovSpectrum:
    """Discrete Steklov spectrum with eigenvectors in full basis coordinates.

    eigenvalues[0] is exactly 0 (constants).  Columns of ``eigenvectors`` are
    B-orthonormal and have zero weighted boundary mean; entries of dropped
    basis elements are zero.  ``clusters`` groups indices whose relative gap is
    below the clustering tolerance.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    clusters: list[list[int]]
    boundary_length: float
    metadata: dict = field(default_factory=dict)

    @property
    def sigma1(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def sigma1_L(self) -> float:
        return self.sigma1 * self.boundary_length

    def cluster_of(self, i: int) -> list[int]:
        if not (0 <= i < len(self.eigenvalues)):
            raise IndexOutOfRange(f"eigenvalue index {i} out of range")
        for c in self.clusters:
            if i in c:
                return c
        raise IndexOutOfRange(f"index {i} not clustered")  # pragma: no cover

    def multiplicity(self, i: int) -> int:
        return len(self.cluster_of(i))

    def to_json(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "clusters": [list(map(int, c)) for c in self.clusters],
            "sigma1L": float(self.sigma1_L) if len(self.eigenvalues) > 1 else None,
        }


def _cluster(vals: np.ndarray, tol: float) -> list[list[int]]:
    clusters = [[0]] if len(vals) else []
    for i in range(1, len(vals)):
        gap = vals[i] - vals[i - 1]
        if gap <= tol * max(1.0, abs(vals[i])):
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def steklov_spectrum(
    domain: CircleDomain,
    density,
    M: int = 16,
    n_eigs: int | None = None,
    *,
    basis: HarmonicBasis | None = None,
    cluster_tol: float = CLUSTER_TOL,
    drop_tol: float = DROP_TOL,
) -> SteklovSpectrum:
    """First ``n_eigs`` weighted Steklov eigenvalues (sigma_0 = 0 included)."""
    if basis is None:
        basis = build_basis(domain, M)
    sys_ = boundary_matrices(basis, density)
    return solve_eigensystem(
        sys_.A, sys_.B, sys_.m, n_eigs,
        cluster_tol=cluster_tol, drop_tol=drop_tol,
        metadata={"M": basis.M, "n_quad": basis.n_quad},
    )


def solve_eigensystem(
    A: np.ndarray,
    B: np.ndarray,
    m: np.ndarray,
    n_eigs: int | None = None,
    *,
    cluster_tol: float = CLUSTER_TOL,
    drop_tol: float = DROP_TOL,
    metadata: dict | None = None,
) -> SteklovSpectrum:
    """Solve A x = sigma B x with constant deflation; element 0 must be the constant."""
    n = A.shape[0]
    diagB = np.diag(B)
    if not np.any(diagB > 0.0):
        raise MassMatrixDegenerate("boundary mass matrix has no positive diagonal")

    # 1. pivoted Cholesky of B; keep columns with pivot >= drop_tol * max pivot
    c, piv, rank, info = dpstrf(B, lower=0, tol=drop_tol * float(np.max(diagB)))
    if info < 0 or rank < 1:
        raise MassMatrixDegenerate(f"pivoted factorization failed (info={info})")
    keep = np.sort(piv[:rank] - 1)
    dropped = n - rank
    if 0 not in keep:
        raise ConditioningFailure("constant element lost in pivoting")

    Ak = A[np.ix_(keep, keep)]
    Bk = B[np.ix_(keep, keep)]
    try:
        Lf = sla.cholesky(Bk, lower=True)
    except sla.LinAlgError as exc:  # pragma: no cover
        raise ConditioningFailure(f"mass factorization failed after drop: {exc}")

    # 2. whiten and deflate the constant: its whitened coordinate y0 = L^T e0
    const_pos = int(np.flatnonzero(keep == 0)[0])
    e0 = np.zeros(rank)
    e0[const_pos] = 1.0
    y0 = Lf.T @ e0
    y0n = y0 / np.linalg.norm(y0)
    # Householder reflector mapping y0n to +-e1; complement columns span the
    # admissible (weighted-mean-zero) subspace
    v = y0n.copy()
    v[0] += np.sign(y0n[0]) if y0n[0] != 0 else 1.0
    v /= np.linalg.norm(v)
    H = np.eye(rank) - 2.0 * np.outer(v, v)
    Q = H[:, 1:]

    Ci = sla.solve_triangular(Lf, Ak, lower=True)
    C = sla.solve_triangular(Lf, Ci.T, lower=True).T
    C = 0.5 * (C + C.T)
    Chat = Q.T @ C @ Q

    # 3. deterministic symmetric eigensolver (tridiagonalize + implicit shifts)
    w, V = sla.eigh(Chat, driver="ev")
    if w[0] < -1e-8:
        raise ConditioningFailure(f"negative eigenvalue {w[0]:.3e} beyond tolerance")
    w = np.clip(w, 0.0, None)

    want = len(w) + 1 if n_eigs is None else min(n_eigs, len(w) + 1)
    vals = np.empty(want)
    vecs = np.zeros((n, want))
    vals[0] = 0.0
    L_total = float(m[0])  # m against the constant element is the weighted length
    vecs[keep[const_pos], 0] = 1.0 / np.sqrt(B[0, 0])
    for i in range(1, want):
        vals[i] = w[i - 1]
        y = Q @ V[:, i - 1]
        x = sla.solve_triangular(Lf.T, y, lower=False)
        vecs[keep, i] = x

    # residuals on the retained subspace
    res = np.zeros(want)
    for i in range(want):
        r = Ak @ vecs[keep, i] - vals[i] * (Bk @ vecs[keep, i])
        den = np.linalg.norm(Bk @ vecs[keep, i])
        res[i] = np.linalg.norm(r) / max(den, 1e-300)

    md = dict(metadata or {})
    md.update({"dropped": int(dropped), "residuals": res, "rank": int(rank)})
    return SteklovSpectrum(
        eigenvalues=vals,
        eigenvectors=vecs,
        clusters=_cluster(vals, cluster_tol),
        boundary_length=L_total,
        metadata=md,
    )


def sigma1(
    domain: CircleDomain,
    density,
    M: int = 16,
    *,
    basis: HarmonicBasis | None = None,
    cluster_tol: float = CLUSTER_TOL,
) -> tuple[float, np.ndarray, SteklovSpectrum]:
    """First nonzero eigenvalue, its cluster of eigenvectors, and the spectrum.

    Returns (sigma_1, eigenvector columns of the sigma_1 cluster, spectrum).
    """
    spec = steklov_spectrum(domain, density, M, basis=basis, cluster_tol=cluster_tol)
    cl = spec.cluster_of(1)
    return spec.sigma1, spec.eigenvectors[:, cl], spec


def coarse_bound(gamma: int, k: int) -> float:
    """Upper bound for sigma_1 * L on genus gamma with k boundary components."""
    if gamma < 0 or k < 1:
        raise ValueError("need gamma >= 0 and k >= 1")
    return min(2.0 * (gamma + k) * np.pi, 8.0 * np.pi * ((gamma + 3) // 2))


def multiplicity_bound(i: int, gamma: int, orientable: bool = True) -> int:
    """Bound for the multiplicity of sigma_i.

    For orientable surfaces of genus gamma the bound is 4*gamma + 2i + 1.  For
    non-orientable ones pass the genus of the orientable double cover as gamma
    (i.e. 1 - chi - k); the bound is then 4*gamma + 4i + 3.
    """
    if i < 1:
        raise ValueError("multiplicity bounds apply to i >= 1")
    if orientable:
        return 4 * gamma + 2 * i + 1
    return 4 * gamma + 4 * i + 3


def multiplicity_check(
    spectrum, i: int, gamma: int, orientable: bool = True, *,
    cluster_tol: float = CLUSTER_TOL,
) -> tuple[int, int, bool]:
    """(multiplicity of sigma_i, bound, within_bound) for a computed spectrum.

    Accepts a SteklovSpectrum, a ClosedFormSpectrum, or a plain sequence of
    eigenvalues in nondecreasing order (sigma_0 first).
    """
    if hasattr(spectrum, "cluster_of"):
        mult = spectrum.multiplicity(i)
    else:
        vals = np.asarray(
            spectrum.eigenvalues if hasattr(spectrum, "eigenvalues") else spectrum,
            dtype=float,
        )
        if not (0 <= i < len(vals)):
            raise IndexOutOfRange(f"eigenvalue index {i} out of range")
        clusters = _cluster(vals, cluster_tol)
        mult = next(len(c) for c in clusters if i in c)
    bound = multiplicity_bound(i, gamma, orientable)
    return mult, bound, mult <= bound


def spectrum_with_length(domain: CircleDomain, density, M: int = 16,
                         n_eigs: int | None = None) -> SteklovSpectrum:
    """Convenience wrapper that also cross-checks the stored boundary length."""
    spec = steklov_spectrum(domain, density, M, n_eigs)
    spec.metadata["boundary_length_direct"] = boundary_length(domain, density)
    return spec
