"""First-order d-bar boundary value problem on a flat cylinder.

Solves df/dz-bar = k on [-T, T] x S^1 with the boundary condition Re f = 0 on
both ends, where z = t + i*theta and df/dz-bar = (f_t + i f_theta)/2.  After a
Fourier transform in theta the modes decouple into pairs (n, -n) of first
order ODEs coupled only through the boundary condition; each pair is solved by
global polynomial collocation on a Legendre-Gauss-Lobatto grid with the
particular solution anchored at the end where the homogeneous solution decays,
plus a 2x2 complex boundary system for the homogeneous amplitudes.  The
problem is solvable iff the double integral of Re k vanishes; the kernel is
the pure imaginary constants, removed by a zero-mean gauge on Im f.

The second half of the module applies the solver: given a scalar field psi on
an annulus-type free boundary minimal surface whose compatibility integral
vanishes, it constructs an ambient conformal vector field Y = Y_tan + psi*nu
with x . Y = 0 on the boundary, and checks the second-variation identity
Q(Y, Y) = S(psi nu, psi nu) connecting the energy and area forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral1d import diff_matrix, fourier_diff, interp_matrix, lobatto
from .surfaces import ParametricSurface, VariationField, energy_form_Q, index_form_S

SOLVABILITY_TOL = 1e-8


class Unsolvable(ValueError):
    """The right-hand side violates the mean-value compatibility condition."""


class BoundarySystemSingular(RuntimeError):
    """A mode boundary system was numerically singular (resonance)."""


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass
class DbarProblem:
    """Right-hand side k on the collocation grid of the cylinder [-T,T] x S^1."""

    T: float
    rhs: np.ndarray  # complex, shape (nt, ntheta)
    symmetry: str = "none"  # "none" | "moebius_odd"
    t_nodes: np.ndarray = field(default=None)
    t_weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.T <= 0.0:
            raise ValueError("half-length T must be positive")
        self.rhs = np.asarray(self.rhs, dtype=complex)
        nt, ntheta = self.rhs.shape
        if not (_is_pow2(nt) and _is_pow2(ntheta)):
            raise ValueError("grid sizes must be powers of two")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("right-hand side must be finite")
        if self.symmetry not in ("none", "moebius_odd"):
            raise ValueError(f"unknown symmetry {self.symmetry!r}")
        if self.t_nodes is None:
            self.t_nodes, self.t_weights = lobatto(nt, -self.T, self.T)

    @property
    def thetas(self) -> np.ndarray:
        ntheta = self.rhs.shape[1]
        return 2.0 * math.pi * np.arange(ntheta) / ntheta


def cylinder_problem(T, rhs, nt=128, ntheta=128, symmetry="none") -> DbarProblem:
    """Build a DbarProblem by sampling a closure rhs(t, theta) on the grid."""
    t, w = lobatto(nt, -T, T)
    th = 2.0 * math.pi * np.arange(ntheta) / ntheta
    tt, hh = np.meshgrid(t, th, indexing="ij")
    k = np.asarray(rhs(tt, hh), dtype=complex)
    return DbarProblem(T=T, rhs=k, symmetry=symmetry, t_nodes=t, t_weights=w)


@dataclass
class DbarSolution:
    """Solution f = u + iv on the grid, plus its Fourier modes in theta.

    ``modes[:, n]`` holds f_n(t) at the Lobatto nodes in numpy FFT frequency
    order.  ``evaluate`` interpolates to arbitrary points (barycentric in t,
    exact trigonometric sum in theta).
    """

    T: float
    t_nodes: np.ndarray
    thetas: np.ndarray
    values: np.ndarray  # complex (nt, ntheta)
    modes: np.ndarray  # complex (nt, ntheta)
    solvability_residual: float
    tail_truncation: float
    conditioning: float
    symmetry: str = "none"
    symmetry_defect: float = 0.0

    def evaluate(self, t, theta) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        bshape = np.broadcast(t, theta).shape
        tf = np.broadcast_to(t, bshape).ravel()
        hf = np.broadcast_to(theta, bshape).ravel()
        uniq, inv = np.unique(tf, return_inverse=True)
        P = interp_matrix(self.t_nodes, uniq)
        modes_at = P @ self.modes
        ntheta = self.modes.shape[1]
        freqs = np.fft.fftfreq(ntheta, d=1.0 / ntheta)
        phases = np.exp(1j * hf[:, None] * freqs[None, :])
        vals = np.sum(modes_at[inv] * phases, axis=1)
        return vals.reshape(bshape)

    def boundary_re_max(self) -> float:
        return float(max(np.max(np.abs(self.values[0].real)),
                         np.max(np.abs(self.values[-1].real))))


def dbar_apply(values: np.ndarray, t_nodes: np.ndarray) -> np.ndarray:
    """Discrete d-bar operator (f_t + i f_theta)/2 on the collocation grid."""
    D = diff_matrix(t_nodes)
    ft = D @ values
    fth = fourier_diff(np.asarray(values, dtype=complex), axis=1)
    return 0.5 * (ft + 1j * fth)


def dbar_residual(solution: DbarSolution, problem: DbarProblem) -> float:
    """Sup-norm PDE residual of a solution against its right-hand side."""
    r = dbar_apply(solution.values, solution.t_nodes) - problem.rhs
    return float(np.max(np.abs(r)))


def solve_dbar(problem: DbarProblem) -> DbarSolution:
    """Solve the cylinder d-bar problem; see the module docstring.

    Raises Unsolvable when |integral of Re k| exceeds SOLVABILITY_TOL times
    the L1 norm of k, and BoundarySystemSingular if a mode system degenerates
    (cannot happen for T > 0; kept as a guard).
    """
    T = problem.T
    t = problem.t_nodes
    w = problem.t_weights
    nt, ntheta = problem.rhs.shape
    if not np.allclose(t, -t[::-1], atol=1e-12):
        raise ValueError("collocation grid must be symmetric about t = 0")

    khat = np.fft.fft(problem.rhs, axis=1) / ntheta  # k_n(t_i)
    dtheta_mass = 2.0 * math.pi

    # Fredholm compatibility: the n = 0 mode carries the full obstruction
    integral_re_k = dtheta_mass * float(w @ khat[:, 0].real)
    l1 = dtheta_mass / ntheta * float(np.sum(w @ np.abs(problem.rhs)))
    if abs(integral_re_k) > SOLVABILITY_TOL * max(l1, 1e-300):
        raise Unsolvable(
            f"mean of Re k is {integral_re_k:.3e} (|k|_L1 = {l1:.3e}); "
            "the problem has no solution with Re f = 0 on the boundary"
        )

    D = diff_matrix(t)
    fhat = np.zeros_like(khat)
    worst_cond = 1.0

    # n = 0: f0' = 2 k0, Re f0(+-T) = 0, Im f0 gauged to zero mean
    g0 = 2.0 * khat[:, 0]
    A0 = D.copy()
    A0[0] = 0.0
    A0[0, 0] = 1.0
    rhs_re = g0.real.copy()
    rhs_re[0] = 0.0
    p_re = np.linalg.solve(A0, rhs_re)
    # distribute the (sub-tolerance) compatibility defect as a linear ramp
    p_re -= p_re[-1] * (t + T) / (2.0 * T)
    rhs_im = g0.imag.copy()
    rhs_im[0] = 0.0
    p_im = np.linalg.solve(A0, rhs_im)
    p_im -= float(w @ p_im) / (2.0 * T)
    fhat[:, 0] = p_re + 1j * p_im

    # paired modes n, -n for 1 <= n < ntheta/2
    for n in range(1, ntheta // 2):
        gp = 2.0 * khat[:, n]
        gm = 2.0 * khat[:, ntheta - n]

        # particular solutions anchored at the decaying end
        Ap = (D - n * np.eye(nt)).astype(complex)
        Ap[-1] = 0.0
        Ap[-1, -1] = 1.0
        bp = gp.copy()
        bp[-1] = 0.0
        pp = np.linalg.solve(Ap, bp)

        Am = (D + n * np.eye(nt)).astype(complex)
        Am[0] = 0.0
        Am[0, 0] = 1.0
        bm = gm.copy()
        bm[0] = 0.0
        pm = np.linalg.solve(Am, bm)

        q = math.exp(-2.0 * n * T)
        det = 1.0 - q * q
        if abs(det) < 1e-14:
            raise BoundarySystemSingular(f"mode pair n = {n} is resonant")
        worst_cond = max(worst_cond, (1.0 + q) / det)
        r1 = -np.conj(pm[-1])  # boundary condition at t = +T
        r2 = -pp[0]  # boundary condition at t = -T
        A = (r1 - q * r2) / det
        B = (r2 - q * r1) / det

        fhat[:, n] = pp + A * np.exp(n * (t - T))
        fhat[:, ntheta - n] = pm + np.conj(B) * np.exp(-n * (t + T))

    # Nyquist column has no conjugate partner on the grid; truncate and report
    tail = float(np.max(np.abs(khat[:, ntheta // 2])))
    fhat[:, ntheta // 2] = 0.0

    defect = 0.0
    if problem.symmetry == "moebius_odd":
        # project onto f(-t, theta+pi) = -conj(f(t, theta)):
        # mode-wise f_n(t) <- (f_n(t) - (-1)^n conj(f_{-n}(-t))) / 2
        signs = np.where(np.arange(ntheta) % 2 == 0, 1.0, -1.0)
        partner = np.conj(fhat[::-1, (-np.arange(ntheta)) % ntheta])
        projected = 0.5 * (fhat - signs[None, :] * partner)
        defect = float(np.max(np.abs(projected - fhat)))
        fhat = projected
        # re-apply the gauge after projection
        fhat[:, 0] -= 1j * float(w @ fhat[:, 0].imag) / (2.0 * T)

    values = np.fft.ifft(fhat, axis=1) * ntheta
    return DbarSolution(
        T=T, t_nodes=t, thetas=problem.thetas,
        values=values, modes=fhat,
        solvability_residual=abs(integral_re_k),
        tail_truncation=tail,
        conditioning=worst_cond,
        symmetry=problem.symmetry,
        symmetry_defect=defect,
    )


# -- conformal variation fields on annulus-type surfaces ----------------------


@dataclass
class ConformalFieldSpace:
    """Candidate normal components for conformal fields and their constraint.

    ``psis`` are scalar closures on the parameter cylinder; ``constraint`` is
    the row of compatibility integrals; ``kernel`` holds coefficient columns
    spanning the admissible subspace (constraint below threshold); ``gram``
    is the L2 Gram matrix of the candidates over the surface.
    """

    labels: list
    psis: list
    gram: np.ndarray
    gram_eigenvalues: np.ndarray
    constraint: np.ndarray
    kernel: np.ndarray
    dim_C: int
    dim_C1: int

    def kernel_psi(self, column: int):
        coeffs = self.kernel[:, column]
        psis = self.psis

        def psi(t, theta):
            out = None
            for c, p in zip(coeffs, psis):
                term = c * p(t, theta)
                out = term if out is None else out + term
            return out

        return psi

    def kernel_psis(self) -> list:
        return [self.kernel_psi(j) for j in range(self.dim_C1)]


def _compat_rhs(surface: ParametricSurface, psi):
    """Closure for k = psi (phi_tt.nu + i phi_ttheta.nu) / |phi_t|^2."""

    def rhs(t, theta):
        nu = surface.unit_normal(t, theta)
        lam2 = np.sum(surface.phi_t(t, theta) ** 2, axis=-1)
        h11 = np.sum(surface.phi_tt(t, theta) * nu, axis=-1)
        h12 = np.sum(surface.phi_ttheta(t, theta) * nu, axis=-1)
        return psi(t, theta) * (h11 + 1j * h12) / lam2

    return rhs


def compatibility_integral(surface: ParametricSurface, psi) -> float:
    """Integral of Re k over the parameter cylinder (the solvability pairing)."""
    t, wt, th, wth = surface.nodes()
    tt, hh = np.meshgrid(t, th, indexing="ij")
    k = _compat_rhs(surface, psi)(tt, hh)
    return float(wt @ np.sum(k.real, axis=1)) * wth


def conformal_field_space(surface: ParametricSurface, svd_tol: float = 1e-8) -> ConformalFieldSpace:
    """Normal-component candidates {nu.e_i} and x.nu with their admissibility.

    Each candidate is normalized to unit L2 norm over the surface (degenerate
    candidates are kept with zero normalization and excluded from the count
    dim_C).  The kernel of the 1 x m constraint row below ``svd_tol`` spans
    the normal components for which build_conformal_variation is solvable.
    """
    if surface.n != 3:
        raise ValueError("conformal field candidates implemented for n = 3")

    base = [
        ("nu1", lambda t, th: surface.unit_normal(t, th)[..., 0]),
        ("nu2", lambda t, th: surface.unit_normal(t, th)[..., 1]),
        ("nu3", lambda t, th: surface.unit_normal(t, th)[..., 2]),
        ("x.nu", lambda t, th: np.sum(surface.phi(t, th) * surface.unit_normal(t, th), axis=-1)),
    ]
    t, wt, th, wth = surface.nodes()
    tt, hh = np.meshgrid(t, th, indexing="ij")
    lam2 = surface.conformal_factor_sq()
    qf = surface.quotient_factor

    grids = [p(tt, hh) for _, p in base]
    m = len(base)
    gram = np.zeros((m, m))
    for a in range(m):
        for b in range(a, m):
            gram[a, b] = gram[b, a] = qf * float(wt @ np.sum(grids[a] * grids[b] * lam2, axis=1)) * wth
    norms = np.sqrt(np.maximum(np.diag(gram), 0.0))

    labels, psis, keepn = [], [], []
    for (lab, p), nrm in zip(base, norms):
        labels.append(lab)
        if nrm > 1e-12:
            psis.append(lambda t, th, p=p, nrm=nrm: p(t, th) / nrm)
            keepn.append(nrm)
        else:
            psis.append(lambda t, th, p=p: p(t, th) * 0.0)
            keepn.append(0.0)

    gram_n = gram.copy()
    for a in range(m):
        for b in range(m):
            na, nb = keepn[a], keepn[b]
            gram_n[a, b] = gram[a, b] / (na * nb) if na > 0 and nb > 0 else 0.0
    evals = np.linalg.eigvalsh(gram_n)
    dim_C = int(np.sum(evals > 1e-8))

    constraint = np.array([compatibility_integral(surface, p) for p in psis])
    row_norm = np.linalg.norm(constraint)
    if row_norm <= svd_tol:
        kernel = np.eye(m)
    else:
        unit = constraint / row_norm
        # kernel of the rank-1 row: complement of its right singular vector
        proj = np.eye(m) - np.outer(unit, unit)
        evals_p, vecs = np.linalg.eigh(proj)
        kernel = vecs[:, evals_p > 0.5]
    # drop kernel directions supported on degenerate (zero) candidates
    live = np.array([nrm > 0.0 for nrm in keepn])
    if not live.all():
        keep_cols = [j for j in range(kernel.shape[1])
                     if np.linalg.norm(kernel[live, j]) > 1e-12]
        kernel = kernel[:, keep_cols]

    return ConformalFieldSpace(
        labels=labels, psis=psis, gram=gram,
        gram_eigenvalues=evals, constraint=constraint,
        kernel=kernel, dim_C=dim_C, dim_C1=kernel.shape[1],
    )


@dataclass
class ConformalVariation:
    """Conformal field Y = u phi_t + v phi_theta + psi nu with certificates."""

    Y: VariationField
    psi: object
    solution: DbarSolution
    residual_diag: float
    residual_offdiag: float
    boundary_tangency: float


def build_conformal_variation(
    surface: ParametricSurface, psi, *, nt=128, ntheta=128,
) -> ConformalVariation:
    """Solve for the tangential part making Y = Y_tan + psi*nu conformal.

    psi must satisfy the compatibility condition (use conformal_field_space);
    Unsolvable propagates otherwise.  The returned field satisfies x . Y = 0
    along the boundary because Re f = 0 there, and carries the sup-norm
    conformality residuals measured on the surface grid.
    """
    problem = cylinder_problem(surface.T, _compat_rhs(surface, psi), nt=nt, ntheta=ntheta)
    sol = solve_dbar(problem)

    def Y_fn(t, theta):
        f = sol.evaluate(t, theta)
        u = f.real[..., None]
        v = f.imag[..., None]
        out = u * surface.phi_t(t, theta) + v * surface.phi_theta(t, theta)
        return out + np.asarray(psi(t, theta))[..., None] * surface.unit_normal(t, theta)

    Y = VariationField(Y_fn, kind="general")

    # conformality certificate on the surface tensor grid
    tt, hh = surface.mesh()
    Yg = Y_fn(tt, hh)
    t_nodes, _, th, _ = surface.nodes()
    Dt = diff_matrix(t_nodes)
    Yt = np.einsum("ij,jkl->ikl", Dt, Yg)
    Yth = fourier_diff(Yg, axis=1)
    pt = surface.phi_t(tt, hh)
    pth = surface.phi_theta(tt, hh)
    lam2 = np.sum(pt**2, axis=-1)
    diag = np.abs(np.sum(Yt * pt, axis=-1) - np.sum(Yth * pth, axis=-1)) / lam2
    off = np.abs(np.sum(Yt * pth, axis=-1) + np.sum(Yth * pt, axis=-1)) / lam2

    tangency = 0.0
    for tb, _sign in surface.boundaries():
        tb_arr = np.full_like(th, tb)
        x = surface.phi(tb_arr, th)
        tangency = max(tangency, float(np.max(np.abs(np.sum(x * Y_fn(tb_arr, th), axis=-1)))))

    return ConformalVariation(
        Y=Y, psi=psi, solution=sol,
        residual_diag=float(np.max(diag)),
        residual_offdiag=float(np.max(off)),
        boundary_tangency=tangency,
    )


@dataclass(frozen=True)
class AreaEnergyReport:
    q_value: float
    s_value: float
    residual: float


def verify_area_energy(surface: ParametricSurface, psi, Y) -> AreaEnergyReport:
    """Relative defect of Q(Y, Y) = S(psi nu, psi nu) for a conformal Y."""
    q = energy_form_Q(surface, Y, Y)

    def W(t, theta):
        return np.asarray(psi(t, theta))[..., None] * surface.unit_normal(t, theta)

    s = index_form_S(surface, VariationField(W, kind="normal"))
    return AreaEnergyReport(q_value=q, s_value=s, residual=abs(q - s) / (1.0 + abs(s)))
