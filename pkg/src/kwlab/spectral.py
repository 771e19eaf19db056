"""Fourier-spectral calculus on the torus: Δ, |∇·|², Helmholtz solves,
and the smallest eigenvalue of Schrödinger operators −Δ + V.

Sign convention is the analyst's one: Δ e^{i⟨ξ,x⟩} = −|ξ|² e^{i⟨ξ,x⟩}.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .domain import ScalarField, TorusDomain
from .errors import DomainError, EigenSolveError


class SpectralPlan:
    """Cached frequency tables for one domain.

    Real-to-complex transforms (rfftn over the last axis) with Hermitian
    symmetry. ksq is |ξ|² per retained frequency; kderiv are the first
    derivative multipliers with the Nyquist mode zeroed (standard spectral
    convention for odd-order derivatives on even grids).
    """

    def __init__(self, domain: TorusDomain):
        self.domain = domain
        freqs = []
        for i, (N, L) in enumerate(zip(domain.sizes, domain.lengths)):
            if i == domain.d - 1:
                k = 2.0 * np.pi * np.fft.rfftfreq(N, d=L / N)
            else:
                k = 2.0 * np.pi * np.fft.fftfreq(N, d=L / N)
            shape = [1] * domain.d
            shape[i] = k.size
            freqs.append(k.reshape(shape))
        self._freqs = freqs
        self.ksq = sum(k**2 for k in freqs)
        kderiv = []
        for i, (N, k) in enumerate(zip(domain.sizes, freqs)):
            kd = k.copy()
            flat = kd.reshape(-1)
            # even N always holds (enforced at domain construction); the
            # Nyquist index is N//2 on full axes and the last rfft entry.
            flat[N // 2 if i < domain.d - 1 else -1] = 0.0
            kderiv.append(kd)
        self._kderiv = kderiv

    def _check(self, u: ScalarField):
        if u.domain != self.domain:
            raise DomainError("field lives on a different domain than this plan")

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(values)

    def ifft(self, spec: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(spec, s=self.domain.sizes, axes=range(self.domain.d))


@lru_cache(maxsize=32)
def get_plan(domain: TorusDomain) -> SpectralPlan:
    return SpectralPlan(domain)


def laplacian(plan: SpectralPlan, u: ScalarField) -> ScalarField:
    plan._check(u)
    return ScalarField(plan.domain, plan.ifft(-plan.ksq * plan.fft(u.values)))


def gradient_components(plan: SpectralPlan, u: ScalarField) -> list[np.ndarray]:
    plan._check(u)
    uhat = plan.fft(u.values)
    return [plan.ifft(1j * kd * uhat) for kd in plan._kderiv]


def grad_norm_sq(plan: SpectralPlan, u: ScalarField) -> ScalarField:
    """Pointwise |∇u|² via spectral first derivatives."""
    comps = gradient_components(plan, u)
    return ScalarField(plan.domain, sum(g**2 for g in comps))


def helmholtz_solve(plan: SpectralPlan, c: float, rhs: ScalarField) -> ScalarField:
    """Unique solution of (−Δ + c) u = rhs for c > 0 (diagonal in Fourier)."""
    if not c > 0:
        raise DomainError(f"Helmholtz constant must be positive, got {c}")
    plan._check(rhs)
    u = plan.ifft(plan.fft(rhs.values) / (plan.ksq + c))
    return ScalarField(plan.domain, u)


def min_eigenvalue(
    plan: SpectralPlan,
    V: ScalarField,
    tol: float = 1e-8,
    max_iters: int | None = None,
) -> float:
    """Smallest eigenvalue of −Δ + V by shifted inverse power iteration.

    Shift σ = min V − 1 makes A − σ symmetric positive definite (potential
    ≥ 1), so the inner solves run conjugate gradients preconditioned by the
    constant-coefficient Helmholtz inverse. Deterministic start vector.
    Accuracy: the 2-norm eigenresidual ‖Av − λv‖ ≤ tol bounds |λ − λ_exact|
    by tol for the symmetric operator.
    """
    plan._check(V)
    if not tol > 0:
        raise DomainError("tol must be positive")
    n = plan.domain.npoints
    sizes = plan.domain.sizes
    sigma = float(np.min(V.values)) - 1.0
    W = V.values - sigma  # ≥ 1 pointwise
    wbar = float(np.mean(W))

    def apply_shifted(x):
        g = x.reshape(sizes)
        return (plan.ifft(plan.ksq * plan.fft(g)) + W * g).reshape(-1)

    def precond(x):
        g = x.reshape(sizes)
        return plan.ifft(plan.fft(g) / (plan.ksq + wbar)).reshape(-1)

    A = LinearOperator((n, n), matvec=apply_shifted)
    M = LinearOperator((n, n), matvec=precond)

    rng = np.random.default_rng(0)
    x = np.ones(n) + 0.01 * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    if max_iters is None:
        max_iters = 10 * max(sizes)
    best = sigma
    for _ in range(max_iters):
        y, info = cg(A, x, x0=x, M=M, rtol=1e-12, atol=0.0, maxiter=20 * max(sizes))
        if info != 0:
            raise EigenSolveError("inner CG solve stagnated", best)
        x = y / np.linalg.norm(y)
        Ax = apply_shifted(x)
        lam_shifted = float(x @ Ax)
        best = lam_shifted + sigma
        resid = float(np.linalg.norm(Ax - lam_shifted * x))
        if resid <= tol:
            return best
    raise EigenSolveError(
        f"inverse power iteration did not reach tol={tol} in {max_iters} iterations", best
    )
