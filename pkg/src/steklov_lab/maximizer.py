"""Ascent machinery for the normalized first Steklov eigenvalue.

The objective is the scale invariant product sigma_1 * L of the first
nonzero eigenvalue with the weighted boundary length.  Two nested searches
are provided: a monotone ascent over boundary weights on a fixed domain
(heat-kernel smoothing at a decreasing scale, multiplicative steps in the
weight, safeguarded where eigenvalues cross), and a derivative-free simplex
search over hole configurations that runs the weight ascent at every probe.
A quadratic certificate measures how close a candidate eigenspace comes to
the extremality conditions: squared eigenfunctions summing to a constant on
the boundary and a vanishing Hopf differential inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import HarmonicBasis, boundary_matrices, build_basis
from .domain import (
    HOLE_MARGIN,
    BoundaryDensity,
    BoundaryMeasureSamples,
    CircleDomain,
    DomainError,
    Hole,
    heat_smooth,
    normalize,
    sample_measure,
)
from .dtn import SteklovSpectrum, steklov_spectrum

EPS_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4)
REL_IMPROVE_TOL = 1e-9
# sup-norm threshold on the averaged ascent direction: below it the trace of
# the eigenvalue derivative vanishes for every weight perturbation, so the
# smallest cluster member cannot be raised to first order
GRAD_TOL = 1e-9


class NotAnEigenfunction(ValueError):
    """The supplied coefficient vector does not solve the eigenproblem."""


class BudgetExhausted(RuntimeError):
    """The shared eigensolve allowance ran out."""


class EigensolveBudget:
    """Counter shared between nested searches; take() enforces the limit."""

    def __init__(self, limit: int = 10**9):
        if limit < 1:
            raise ValueError("budget must allow at least one eigensolve")
        self.limit = int(limit)
        self.used = 0

    def take(self) -> None:
        if self.used >= self.limit:
            raise BudgetExhausted(f"eigensolve budget {self.limit} exhausted")
        self.used += 1

    @property
    def remaining(self) -> int:
        return self.limit - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.limit


@dataclass
class AscentState:
    """Outcome of a weight ascent on a fixed domain.

    trace holds (iteration, eps, value) rows; within one smoothing level the
    values are nondecreasing because steps are only accepted on improvement.
    phase_residuals records the boundary certificate residual at the end of
    each smoothing level.
    """

    domain: CircleDomain
    density: BoundaryMeasureSamples
    eps: float
    value: float
    trace: list = field(default_factory=list)
    spectrum: SteklovSpectrum | None = None
    eigenspace: np.ndarray | None = None
    stalled: bool = False
    budget_exhausted: bool = False
    eigensolves: int = 0
    phase_residuals: list = field(default_factory=list)


@dataclass
class Certificate:
    """Least-squares extremality certificate over a candidate eigenspace."""

    coefficients: np.ndarray
    residual_boundary: float
    residual_conformal: float
    n: int
    eigenspace_too_small: bool = False


@dataclass
class ConfigurationResult:
    domain: CircleDomain
    density: BoundaryMeasureSamples
    value: float
    state: AscentState
    eigensolves: int = 0
    budget_exhausted: bool = False


@dataclass
class SweepEntry:
    k: int
    value: float
    domain: CircleDomain
    density: BoundaryMeasureSamples
    flags: list = field(default_factory=list)


# -- weight handling ----------------------------------------------------------


def _as_samples(domain: CircleDomain, density, n: int) -> BoundaryMeasureSamples:
    """Coerce any boundary weight to per-circle samples on an n-point grid."""
    if isinstance(density, BoundaryMeasureSamples):
        if len(density.values[0]) == n:
            return density
        th = 2.0 * math.pi * np.arange(n) / n
        vals = tuple(
            density.density_values(j, th) * density.radii[j]
            for j in range(density.k)
        )
        return BoundaryMeasureSamples(vals, density.radii)
    return sample_measure(domain, density, n)


def _mu_integral(samples: BoundaryMeasureSamples, funcs) -> float:
    """Integral of a per-circle function list against the weighted measure."""
    total = 0.0
    for j, f in enumerate(funcs):
        total += 2.0 * math.pi * float(np.mean(f * samples.values[j]))
    return total


def density_gradient(domain, density, coeffs, *, M: int = 16,
                     basis: HarmonicBasis | None = None,
                     residual_tol: float = 1e-8):
    """First variation of sigma_1 under multiplicative weight perturbations.

    coeffs must describe an eigenfunction of the weighted problem to relative
    residual residual_tol; it is renormalized to unit weighted boundary L2
    internally.  Returns one array per boundary circle, sampled on the same
    uniform grid as the weight, with mean zero against the weighted measure.
    Stepping the log-weight along the returned function raises sigma_1 * L
    to first order.
    """
    if basis is None:
        basis = build_basis(domain, M)
    samples = _as_samples(domain, density, basis.n_quad)
    mats = boundary_matrices(basis, samples)
    x = np.asarray(coeffs, dtype=float).ravel()
    if x.shape != (basis.size,):
        raise NotAnEigenfunction(
            f"coefficient vector has length {x.size}, basis needs {basis.size}"
        )
    Ax = mats.A @ x
    Bx = mats.B @ x
    den = float(x @ Bx)
    if den <= 0.0:
        raise NotAnEigenfunction("vector has nonpositive boundary norm")
    sigma = float(x @ Ax) / den
    scale = max(np.linalg.norm(Ax), abs(sigma) * np.linalg.norm(Bx), 1e-300)
    resid = np.linalg.norm(Ax - sigma * Bx) / scale
    if resid > residual_tol:
        raise NotAnEigenfunction(
            f"eigenproblem residual {resid:.2e} exceeds {residual_tol:.1e}"
        )
    x = x / math.sqrt(den)
    L = samples.total_mass()
    u = [x @ basis.traces(j) for j in range(domain.k)]
    avg = _mu_integral(samples, [uj**2 for uj in u]) / L
    g = [-sigma * (uj**2 - avg) for uj in u]
    shift = _mu_integral(samples, g) / L
    return tuple(gj - shift for gj in g)


# -- inner ascent -------------------------------------------------------------


def _cluster_directions(basis, samples, spec, near_width=1e-2):
    """Candidate ascent directions at sigma_1, sup-normalized.

    Averaging the squared eigenfunctions over a group of eigenvalues gives a
    direction independent of the basis chosen inside it; it is built twice,
    once over every eigenvalue within near_width of sigma_1 (so branches
    about to cross are lifted jointly) and once over the strict cluster,
    whose members follow individually as fallbacks.  Empty return means
    stationary.  With a strict cluster of size > 1 a negligible averaged
    direction already implies stationarity: the trace of the eigenvalue
    derivative then vanishes for every weight perturbation, so its smallest
    branch cannot rise to first order.
    """
    sigma = spec.sigma1
    L = samples.total_mass()
    k = samples.k
    tiny = GRAD_TOL * (1.0 + sigma)

    def gradient(sq):
        avg = _mu_integral(samples, sq) / L
        g = [-sigma * (q - avg) for q in sq]
        shift = _mu_integral(samples, g) / L
        return [gj - shift for gj in g]

    def averaged(cols):
        us = [cols.T @ basis.traces(j) for j in range(k)]
        g = gradient([np.mean(us[j] ** 2, axis=0) for j in range(k)])
        sup = max(float(np.max(np.abs(gj))) for gj in g)
        return g, sup, us

    strict = spec.eigenvectors[:, spec.cluster_of(1)]
    g_strict, sup_strict, us = averaged(strict)
    if strict.shape[1] > 1 and sup_strict <= tiny:
        return []
    dirs = []
    near = _near_cluster(spec, near_width)
    if near.shape[1] > strict.shape[1]:
        g_near, sup_near, _ = averaged(near)
        if sup_near > tiny:
            dirs.append(tuple(gj / sup_near for gj in g_near))
    if sup_strict > tiny:
        dirs.append(tuple(gj / sup_strict for gj in g_strict))
    if strict.shape[1] > 1:
        for i in range(strict.shape[1]):
            gi = gradient([us[j][i] ** 2 for j in range(k)])
            s = max(float(np.max(np.abs(gj))) for gj in gi)
            if s > tiny:
                dirs.append(tuple(gj / s for gj in gi))
    return dirs


def _step_candidate(domain, samples, direction, s, eps):
    """Multiplicative step of size s, then smoothing and unit total mass."""
    vals = tuple(
        v * np.exp(s * d) for v, d in zip(samples.values, direction)
    )
    cand = BoundaryMeasureSamples(vals, samples.radii)
    return normalize(domain, heat_smooth(cand, eps))


def _near_cluster(spec: SteklovSpectrum, tol: float) -> np.ndarray:
    """Eigenvector columns within tol of sigma_1 (always including it)."""
    vals = spec.eigenvalues
    keep = [
        i for i in range(1, len(vals))
        if vals[i] - vals[1] <= tol * max(1.0, vals[1])
    ]
    return spec.eigenvectors[:, keep]


def _boundary_fit(basis, samples, cols, dzu=None):
    """Best symmetric C with sum_ab C_ab u_a u_b = 1 on the boundary.

    Weighted least squares against the boundary measure.  The boundary data
    alone can leave C underdetermined (on a rotationally symmetric optimum
    every squared-eigenfunction combination is constant per circle), so when
    interior derivative samples are supplied the leftover null directions
    are fixed by minimizing the Hopf sum as a secondary objective.  C is
    then projected to the positive semidefinite cone.  Returns the clipped
    matrix, the sup-norm boundary residual, and the number of independent
    directions.
    """
    m = cols.shape[1]
    pairs = [(a, b) for a in range(m) for b in range(a, m)]
    rows = []
    rhs = []
    tracesU = []
    for j in range(samples.k):
        U = cols.T @ basis.traces(j)
        tracesU.append(U)
        w = samples.values[j] * (2.0 * math.pi / len(samples.values[j]))
        sw = np.sqrt(w)
        X = np.empty((U.shape[1], len(pairs)))
        for p, (a, b) in enumerate(pairs):
            fac = 1.0 if a == b else 2.0
            X[:, p] = fac * U[a] * U[b]
        rows.append(X * sw[:, None])
        rhs.append(sw)
    X = np.vstack(rows)
    y = np.concatenate(rhs)
    Um, sv, Vt = np.linalg.svd(X, full_matrices=False)
    # the cut sits well above eigensolver roundoff: a weight that has been
    # ascended to an optimum carries O(1e-7) noise wiggles which would
    # otherwise promote a symmetry null direction to rank and leave the
    # interior tie-break with nothing to decide
    rank = int(np.sum(sv > 1e-5 * sv[0])) if sv.size else 0
    c = Vt[:rank].T @ ((Um[:, :rank].T @ y) / sv[:rank])
    if dzu is not None and rank < len(pairs):
        null = Vt[rank:].T
        Z = np.empty((dzu.shape[1], len(pairs)), dtype=complex)
        for p, (a, b) in enumerate(pairs):
            fac = 1.0 if a == b else 2.0
            Z[:, p] = fac * dzu[a] * dzu[b]
        ZN = Z @ null
        zc = Z @ c
        A2 = np.vstack([ZN.real, ZN.imag])
        b2 = -np.concatenate([zc.real, zc.imag])
        coef, *_ = np.linalg.lstsq(A2, b2, rcond=None)
        c = c + null @ coef
    C = np.zeros((m, m))
    for p, (a, b) in enumerate(pairs):
        C[a, b] = c[p]
        C[b, a] = c[p]
    w, V = np.linalg.eigh(C)
    wc = np.clip(w, 0.0, None)
    C = (V * wc) @ V.T
    n_indep = int(np.sum(wc > 1e-8 * max(1.0, float(wc[-1]))))
    resid = 0.0
    for U in tracesU:
        pred = np.einsum("ab,ax,bx->x", C, U, U)
        resid = max(resid, float(np.max(np.abs(pred - 1.0))))
    return C, resid, n_indep


def optimize_density(domain, init_density, eps_schedule=EPS_SCHEDULE,
                     max_iters: int = 40, *, M: int = 16,
                     basis: HarmonicBasis | None = None,
                     budget: EigensolveBudget | None = None,
                     cluster_tol: float = 1e-6, halvings: int = 24,
                     rel_tol: float = REL_IMPROVE_TOL) -> AscentState:
    """Monotone ascent of sigma_1 * L over boundary weights on a fixed domain.

    For each smoothing level eps, the current weight is smoothed once and
    then improved by accepted steps only: a candidate multiplies the weight
    by exp(s * direction), is smoothed at the same eps, renormalized to unit
    mass, and kept when its recomputed sigma_1 * L strictly increases, with
    s halved on rejection.  The step size is warm-started from the last
    accepted one, since near an eigenvalue crossing the useful window can
    sit several orders of magnitude below 1.  A level ends on stationarity,
    on relative gains below rel_tol, on max_iters, or when no candidate
    direction improves (stalled).  The budget, when given, is shared with
    the caller and the best state so far is returned once it runs out.
    """
    eps_schedule = tuple(float(e) for e in eps_schedule)
    if not eps_schedule or any(e <= 0.0 for e in eps_schedule):
        raise ValueError("eps_schedule must be positive")
    if any(b > a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("eps_schedule must be nonincreasing")
    if basis is None:
        basis = build_basis(domain, M)
    if budget is None:
        budget = EigensolveBudget()
    count = 0

    def solve(d):
        nonlocal count
        budget.take()
        count += 1
        return steklov_spectrum(
            domain, d, basis.M, basis=basis, cluster_tol=cluster_tol
        )

    dens = normalize(domain, _as_samples(domain, init_density, basis.n_quad))
    trace = []
    phase_residuals = []
    spec = None
    value = -math.inf
    eps_cur = eps_schedule[0]
    stalled = False
    exhausted = False
    it = 0
    try:
        for eps in eps_schedule:
            eps_cur = eps
            dens = normalize(domain, heat_smooth(dens, eps))
            spec = solve(dens)
            value = spec.sigma1_L
            trace.append((it, eps, value))
            it += 1
            phase_stalled = False
            accepted_any = False
            s0 = 1.0
            for _ in range(max_iters):
                dirs = _cluster_directions(basis, dens, spec)
                if not dirs:
                    break
                accepted = None
                for d in dirs:
                    s = s0
                    for _h in range(halvings):
                        cand = _step_candidate(domain, dens, d, s, eps)
                        cspec = solve(cand)
                        cval = cspec.sigma1_L
                        if cval > value:
                            accepted = (cand, cspec, cval)
                            break
                        s *= 0.5
                        if s < 1e-9:
                            break
                    if accepted is not None:
                        s0 = min(1.0, 8.0 * s)
                        break
                if accepted is None:
                    # only a phase that never moved counts as stalled; running
                    # out of ascent after accepted steps is ordinary convergence
                    phase_stalled = not accepted_any
                    break
                accepted_any = True
                gain = (accepted[2] - value) / max(abs(value), 1.0)
                dens, spec, value = accepted
                trace.append((it, eps, value))
                it += 1
                if gain < rel_tol:
                    break
            stalled = phase_stalled
            cols = _near_cluster(spec, 1e-2)
            phase_residuals.append((eps, _boundary_fit(basis, dens, cols)[1]))
    except BudgetExhausted:
        exhausted = True
        if spec is None:
            raise
    eigenspace = spec.eigenvectors[:, spec.cluster_of(1)]
    return AscentState(
        domain=domain,
        density=dens,
        eps=eps_cur,
        value=value,
        trace=trace,
        spectrum=spec,
        eigenspace=eigenspace,
        stalled=stalled,
        budget_exhausted=exhausted,
        eigensolves=count,
        phase_residuals=phase_residuals,
    )


# -- extremality certificate --------------------------------------------------


def extremality_certificate(domain, density, eigenspace, *, M: int = 16,
                            basis: HarmonicBasis | None = None,
                            interior_grid=(64, 64),
                            margin: float = 1e-3) -> Certificate:
    """Certificate of extremality for a candidate sigma_1 eigenspace.

    Fits the best positive semidefinite quadratic form making the squared
    eigenfunctions sum to one against the boundary measure, breaking any
    boundary-data tie by the interior conformality defect, then reports the
    boundary sup residual and the largest Hopf differential magnitude
    2 |sum_ab C_ab df_a/dz df_b/dz| over an interior polar grid.  A space of
    dimension < 2 cannot certify anything; this is flagged, not raised.
    """
    if basis is None:
        basis = build_basis(domain, M)
    samples = _as_samples(domain, density, basis.n_quad)
    cols = np.asarray(eigenspace, dtype=float)
    if cols.ndim == 1:
        cols = cols[:, None]
    too_small = cols.shape[1] < 2

    nr, nth = interior_grid
    r = (np.arange(nr) + 0.5) / nr
    th = 2.0 * math.pi * np.arange(nth) / nth
    z = np.ravel(r[:, None] * np.exp(1j * th)[None, :])
    z = z[domain.contains(z, margin)]
    dzu = cols.T @ basis.dz_at(z) if z.size else None
    C, res_b, n_indep = _boundary_fit(basis, samples, cols, dzu=dzu)
    if dzu is not None:
        hopf = np.einsum("ab,ax,bx->x", C, dzu, dzu)
        res_c = 2.0 * float(np.max(np.abs(hopf)))
    else:
        res_c = math.nan
    return Certificate(
        coefficients=C,
        residual_boundary=res_b,
        residual_conformal=res_c,
        n=n_indep,
        eigenspace_too_small=too_small,
    )


# -- configuration search -----------------------------------------------------


def _norm_symmetry(symmetry) -> str:
    if symmetry is None:
        return "none"
    s = str(symmetry).lower()
    if s not in ("none", "cyclic"):
        raise ValueError(f"unknown symmetry {symmetry!r}")
    return s


def _holes_for(sym: str, k: int, p) -> list:
    """Raw (center, radius) list for a parameter vector, reflected positive."""
    if sym == "cyclic":
        ring, hr = abs(p[0]), abs(p[1])
        return [
            (ring * np.exp(2j * math.pi * j / (k - 1)), hr)
            for j in range(k - 1)
        ]
    holes = [(complex(abs(p[0]), 0.0), abs(p[1]))]
    i = 2
    for _ in range(k - 2):
        holes.append((complex(p[i], p[i + 1]), abs(p[i + 2])))
        i += 3
    return holes


def _violation(holes) -> float:
    """How far a hole layout is from admissible; zero means buildable."""
    gap = 2.0 * HOLE_MARGIN
    v = 0.0
    for c, r in holes:
        v += max(0.0, abs(c) + r - (1.0 - gap)) + max(0.0, 1e-4 - r)
    for i in range(len(holes)):
        for j in range(i + 1, len(holes)):
            need = holes[i][1] + holes[j][1] + gap
            v += max(0.0, need - abs(holes[i][0] - holes[j][0]))
    return v


def _nelder_mead_max(f, x0, steps, max_iters: int, *,
                     ftol: float = 1e-7, xtol: float = 1e-5):
    """Plain simplex maximization; f may raise BudgetExhausted to stop it."""
    x0 = np.asarray(x0, dtype=float)
    dim = len(x0)
    pts = [x0.copy()]
    for i in range(dim):
        q = x0.copy()
        q[i] += steps[i]
        pts.append(q)
    vals = [f(p) for p in pts]
    for _ in range(max_iters):
        order = sorted(range(dim + 1), key=lambda i: -vals[i])
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        if vals[0] - vals[-1] <= ftol * (1.0 + abs(vals[0])):
            break
        if max(np.max(np.abs(p - pts[0])) for p in pts[1:]) <= xtol:
            break
        centroid = np.mean(pts[:-1], axis=0)
        xr = centroid + (centroid - pts[-1])
        fr = f(xr)
        if fr > vals[0]:
            xe = centroid + 2.0 * (centroid - pts[-1])
            fe = f(xe)
            if fe > fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
        elif fr > vals[-2]:
            pts[-1], vals[-1] = xr, fr
        else:
            xc = centroid + 0.5 * (pts[-1] - centroid)
            fc = f(xc)
            if fc > vals[-1]:
                pts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, dim + 1):
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0])
                    vals[i] = f(pts[i])
    order = sorted(range(dim + 1), key=lambda i: -vals[i])
    return pts[order[0]], vals[order[0]]


def optimize_configuration(k: int, symmetry="cyclic", budget=6000, *,
                           M: int = 16, probe_M: int = 12,
                           probe_schedule=(3e-2, 1e-3), probe_iters: int = 8,
                           probe_rel_tol: float = 1e-7, nm_iters: int = 60,
                           polish_schedule=EPS_SCHEDULE,
                           polish_iters: int = 40) -> ConfigurationResult:
    """Search hole layouts for the largest sigma_1 * L with k boundary circles.

    Under cyclic symmetry the k - 1 holes sit on a concentric ring at equal
    angles, leaving two parameters; without symmetry the first hole is
    rotated onto the positive axis and every center and radius is free.
    Each probe runs a cheap weight ascent; the winner is polished with the
    full smoothing schedule.  The value returned is attained by the returned
    weight, so it is a certified lower bound for the supremum.
    """
    if k < 2:
        raise ValueError("configuration search needs k >= 2")
    sym = _norm_symmetry(symmetry)
    bud = budget if isinstance(budget, EigensolveBudget) else EigensolveBudget(int(budget))
    used0 = bud.used
    if sym == "cyclic":
        x0 = [0.55, 0.25 / k]
        steps = [-0.2, -0.04]
    else:
        x0 = [0.55, 0.25 / k]
        steps = [-0.2, -0.04]
        for j in range(1, k - 1):
            ang = 2.0 * math.pi * j / (k - 1)
            x0 += [0.55 * math.cos(ang), 0.55 * math.sin(ang), 0.25 / k]
            steps += [-0.1, -0.1, -0.04]
    best = {"value": -math.inf, "domain": None, "state": None}

    def probe(p):
        holes = _holes_for(sym, k, p)
        v = _violation(holes)
        if v > 0.0:
            return -10.0 - 100.0 * v
        try:
            dom = CircleDomain(tuple(Hole(c, r) for c, r in holes))
        except DomainError:
            return -10.0
        if bud.exhausted:
            raise BudgetExhausted("no eigensolves left for probe")
        st = optimize_density(
            dom, BoundaryDensity.uniform(dom.k), probe_schedule, probe_iters,
            M=probe_M, budget=bud, halvings=6, rel_tol=probe_rel_tol,
        )
        if st.value > best["value"]:
            best.update(value=st.value, domain=dom, state=st)
        return st.value

    try:
        _nelder_mead_max(probe, x0, steps, nm_iters)
    except BudgetExhausted:
        pass
    if best["domain"] is None:
        raise BudgetExhausted("budget spent before any admissible probe")

    if not bud.exhausted:
        try:
            polished = optimize_density(
                best["domain"], BoundaryDensity.uniform(best["domain"].k),
                polish_schedule, polish_iters, M=M, budget=bud,
            )
            if polished.value > best["value"]:
                best.update(value=polished.value, state=polished)
        except BudgetExhausted:
            pass
    state = best["state"]
    return ConfigurationResult(
        domain=best["domain"],
        density=state.density,
        value=best["value"],
        state=state,
        eigensolves=bud.used - used0,
        budget_exhausted=bud.exhausted,
    )


def sweep_k(k_list, symmetry="cyclic", budget: int = 6000):
    """Best sigma_1 * L estimate per boundary-circle count, one row each.

    k = 1 is the plain disk and only the weight is optimized; every other
    entry runs the configuration search with a fresh budget.  Flags record
    stalls and budget exhaustion instead of raising.
    """
    out = []
    for k in k_list:
        k = int(k)
        if k < 1:
            raise ValueError("boundary circle counts must be >= 1")
        if k == 1:
            dom = CircleDomain()
            st = optimize_density(
                dom, BoundaryDensity.uniform(1),
                budget=EigensolveBudget(budget),
            )
            flags = []
            if st.stalled:
                flags.append("stalled")
            if st.budget_exhausted:
                flags.append("budget_exhausted")
            out.append(SweepEntry(1, st.value, dom, st.density, flags))
            continue
        res = optimize_configuration(k, symmetry, budget)
        flags = []
        if res.state.stalled:
            flags.append("stalled")
        if res.budget_exhausted:
            flags.append("budget_exhausted")
        out.append(SweepEntry(k, res.value, res.domain, res.density, flags))
    return out
