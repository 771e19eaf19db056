"""Executable a-priori estimates: the maximum-principle sup bound on compact
subsets of {S < 0}, lower bounds, and uniform-boundedness surrogates for
solution families approaching the critical threshold.

"Uniformly bounded" for a finite family is operationalized as: every value
finite, and the last-quartile trend flat (normalized slope within 0.01 per
member). A finite family cannot certify a limit; the trend test is the
falsifiable surrogate.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import problem, spectral
from .domain import RegionMask, ScalarField, integrate
from .errors import DomainError, EigenSolveError
from .problem import ProblemInstance
from .solvers import SolveReport

TREND_SLOPE_TOL = 0.01     # per member, after normalization by the column scale
SUPPORT_EPS = 1e-12        # φ > this counts as support
PLATEAU_TOL = 1e-9         # φ ≥ 1 − this counts as the plateau {φ = 1}


def trend_slope(values: list[float]) -> float:
    """Least-squares slope over the last quartile, normalized by column scale."""
    v = np.asarray(values, dtype=float)
    k = len(v)
    if k < 2:
        return 0.0
    start = max(0, k - max(2, k // 4 + 1))
    tail = v[start:]
    x = np.arange(len(tail), dtype=float)
    slope = float(np.polyfit(x, tail, 1)[0])
    scale = max(1.0, float(np.max(np.abs(v))))
    return slope / scale


def is_flat(values: list[float], tol: float = TREND_SLOPE_TOL) -> bool:
    return np.all(np.isfinite(values)) and abs(trend_slope(values)) <= tol


@dataclass
class AprioriBoundCertificate:
    """sup_K u ≤ bound_on_sup_u for every solution at any α in (α★, 0),
    computed purely from (S, α★, φ, K) via the maximum principle."""

    cutoff: ScalarField
    K: RegionMask
    C1: float
    bound_on_sup_u: float
    n: int
    margins: list[float] = field(default_factory=list)

    def margin(self, u: ScalarField) -> float:
        """bound − sup_K u; nonnegative when the certificate holds."""
        sup_K = float(np.max(u.values[self.K.mask]))
        return self.bound_on_sup_u - sup_K

    def check_family(self, family: list[SolveReport]) -> bool:
        self.margins = [self.margin(rep.solution) for rep in family]
        return all(m >= 0 for m in self.margins)


def apriori_c0_bound(
    S: ScalarField,
    alpha_star: float,
    phi: ScalarField,
    K: RegionMask,
    n: int,
) -> AprioriBoundCertificate:
    """Certified sup bound on K ⊆ {φ = 1} ⊆ supp φ ⊆ {S < 0}.

    C = max over M of (2|∇φ|² − 2φ·Δφ − (2/n)·α★·φ²), then
    sup_K e^{2u/n} ≤ −(n/2)·C / max_{supp φ} S.
    """
    if phi.domain != S.domain or K.domain != S.domain:
        raise DomainError("S, phi and K must share one domain")
    if not alpha_star < 0:
        raise DomainError("alpha_star must be negative")
    support = phi.values > SUPPORT_EPS
    if np.any(S.values[support] >= 0):
        raise DomainError("cutoff support leaks outside {S < 0}")
    max_S_supp = float(np.max(S.values[support]))
    if max_S_supp >= 0:
        raise DomainError("max of S on supp φ must be negative")
    if not np.all(phi.values[K.mask] >= 1.0 - PLATEAU_TOL):
        raise DomainError("K must lie inside the plateau {φ = 1}")

    plan = spectral.get_plan(S.domain)
    gsq = spectral.grad_norm_sq(plan, phi)
    lap = spectral.laplacian(plan, phi)
    expr = (
        2.0 * gsq.values
        - 2.0 * phi.values * lap.values
        - (2.0 / n) * alpha_star * phi.values**2
    )
    C = float(np.max(expr))
    bound_exp = -(n / 2.0) * C / max_S_supp
    if not (np.isfinite(bound_exp) and bound_exp > 0):
        raise DomainError("certificate degenerate: nonpositive bound on e^{2u/n}")
    return AprioriBoundCertificate(
        cutoff=phi,
        K=K,
        C1=C,
        bound_on_sup_u=(n / 2.0) * float(np.log(bound_exp)),
        n=n,
    )


def auto_cutoff_region(S: ScalarField, eps0: float | None = None):
    """Default (φ, K, M₋) for diagnostics on a given S.

    M₋ is the sublevel set {S < −ε₀}; φ is a radial cutoff centered at the
    minimizer of S with the largest outer radius whose ball stays inside
    M₋; K is a ball inside the plateau of φ. When S < −ε₀ everywhere the
    cutoff degenerates to φ ≡ 1 with K the whole torus.
    """
    from .domain import CutoffSpec, ball_mask, make_cutoff, sublevel_mask

    domain = S.domain
    if eps0 is None:
        eps0 = 0.05 * S.sup_norm
    m_minus = sublevel_mask(S, -eps0, label="M_minus")
    if m_minus.empty:
        raise DomainError(f"{{S < -{eps0}}} is empty; pick a smaller eps0")
    if not np.any(~m_minus.mask):
        phi = ScalarField.constant(domain, 1.0)
        K = RegionMask(domain, np.ones(domain.sizes, dtype=bool), "K")
        return phi, K, m_minus

    argmin = np.unravel_index(np.argmin(S.values), domain.sizes)
    center = tuple(domain.axis_coords(i)[argmin[i]] for i in range(domain.d))
    dist = domain.periodic_distance(center)
    r_out = float(np.min(dist[~m_minus.mask])) - max(domain.spacings)
    r_out = min(r_out, 0.5 * min(domain.lengths))
    if r_out <= 2 * max(domain.spacings):
        raise DomainError("negative set of S too thin for an automatic cutoff")
    r_in = 0.5 * r_out
    phi = make_cutoff(domain, CutoffSpec(center=center, r_inner=r_in, r_outer=r_out))
    K = ball_mask(domain, center, 0.9 * r_in, label="K")
    return phi, K, m_minus


@dataclass
class LowerBoundVerdict:
    passed: bool
    A_observed: float
    inf_series: list[float]


def check_lower_bound(family: list[SolveReport]) -> LowerBoundVerdict:
    """Uniform lower bound surrogate: family infima finite and not diverging
    downward (last-quartile slope above −tolerance)."""
    if not family:
        raise DomainError("empty family")
    infs = [rep.solution.min for rep in family]
    A_obs = -min(infs)
    passed = bool(np.all(np.isfinite(infs)) and trend_slope(infs) >= -TREND_SLOPE_TOL)
    return LowerBoundVerdict(passed=passed, A_observed=A_obs, inf_series=infs)


@dataclass
class SupInfTrack:
    series: list[float]
    passed: bool


def sup_inf_track(family: list[SolveReport], K: RegionMask) -> SupInfTrack:
    """sup_K u + inf_K u per member; passes when bounded above across the
    family (flat or decreasing last-quartile trend)."""
    if K.empty:
        raise DomainError("empty K")
    series = []
    for rep in family:
        on_K = rep.solution.values[K.mask]
        series.append(float(np.max(on_K) + np.min(on_K)))
    passed = bool(np.all(np.isfinite(series)) and trend_slope(series) <= TREND_SLOPE_TOL)
    return SupInfTrack(series=series, passed=passed)


FAMILY_COLUMNS = (
    "alpha", "sup_K_u", "inf_M_u", "grad_l2", "int_exp", "lambda_min",
    "sup_plus_inf", "defect",
)


@dataclass
class FamilyDiagnostics:
    rows: list[dict]
    verdicts: dict[str, bool]

    @property
    def all_pass(self) -> bool:
        return all(self.verdicts.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=FAMILY_COLUMNS)
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row[k] for k in FAMILY_COLUMNS})
        return buf.getvalue()


def family_table(
    family: list[SolveReport],
    K: RegionMask,
    S: ScalarField,
    n: int,
    eig_tol: float = 1e-7,
) -> FamilyDiagnostics:
    """Per-member diagnostics plus boundedness verdicts.

    Columns: parameter value, sup of u on K, global inf of u, Dirichlet
    seminorm, ∫e^{2u/n}, smallest stability eigenvalue, sup_K u + inf_K u,
    and the mean-identity defect.
    """
    if not family:
        raise DomainError("empty family")
    if K.empty:
        raise DomainError("empty K")
    plan = spectral.get_plan(S.domain)
    rows = []
    for rep in family:
        u = rep.solution
        inst = ProblemInstance(S.domain, S, rep.alpha, n)
        gsq = spectral.grad_norm_sq(plan, u)
        exp_field = ScalarField(S.domain, problem.conformal_factor(inst, u))
        try:
            lam = spectral.min_eigenvalue(plan, problem.stability_potential(inst, u), eig_tol)
        except EigenSolveError as e:
            lam = e.best_estimate
        rep.min_eig = lam
        on_K = u.values[K.mask]
        check = problem.integral_identity_defect(inst, u)
        rows.append({
            "alpha": rep.alpha,
            "sup_K_u": float(np.max(on_K)),
            "inf_M_u": u.min,
            "grad_l2": float(np.sqrt(integrate(gsq))),
            "int_exp": integrate(exp_field),
            "lambda_min": lam,
            "sup_plus_inf": float(np.max(on_K) + np.min(on_K)),
            "defect": check.defect,
        })

    def col(name):
        return [row[name] for row in rows]

    verdicts = {
        "lower_bound": check_lower_bound(family).passed,
        "sup_K_bounded": is_flat(col("sup_K_u")),
        "w12_bounded": is_flat(col("grad_l2")),
        "exp_mass_bounded": is_flat(col("int_exp")),
        "sup_inf_bounded": trend_slope(col("sup_plus_inf")) <= TREND_SLOPE_TOL,
        "stability": all(
            row["lambda_min"] >= -1e-6
            for row, rep in zip(rows, family)
            if rep.method in ("monotone", "minimize")
        ),
        "identity": all(row["defect"] <= 1e-8 for row in rows),
    }
    return FamilyDiagnostics(rows=rows, verdicts=verdicts)
