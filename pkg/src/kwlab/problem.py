"""One Kazdan-Warner instance −Δu + α = S·e^{2u/n} on a flat torus, with its
residual, energy functional, first/second variations, and the mean identity
∫ S e^{2u/n} = α·Vol obtained by integrating the equation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import spectral
from .domain import ScalarField, TorusDomain, integrate
from .errors import BlowUpError, DomainError

# e^{2u/n} is never evaluated past this exponent; hitting the cap is treated
# as blow-up evidence, not as a value.
EXP_ARG_CAP = 400.0


@dataclass(frozen=True)
class ProblemInstance:
    domain: TorusDomain
    S: ScalarField
    alpha: float
    n: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise DomainError(f"complex dimension n must be 1 or 2, got {self.n}")
        if self.domain.d != 2 * self.n:
            raise DomainError(f"grid dimension {self.domain.d} must equal 2n = {2 * self.n}")
        if not self.alpha < 0:
            raise DomainError(f"alpha must be negative, got {self.alpha}")
        if self.S.domain != self.domain:
            raise DomainError("S lives on a different domain")

    @property
    def mean_S_negative(self) -> bool:
        """Admissibility flag: ∫S < 0 is necessary for a finite-threshold path."""
        return integrate(self.S) < 0


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float      # ∫ |∇u|²
    linear: float         # ∫ 2αu
    exponential: float    # −∫ n S e^{2u/n}

    @property
    def total(self) -> float:
        return self.dirichlet + self.linear + self.exponential


def conformal_factor(inst: ProblemInstance, u: ScalarField) -> np.ndarray:
    """e^{2u/n} with an overflow guard; the cap is blow-up signal upstream."""
    arg = (2.0 / inst.n) * u.values
    amax = float(np.max(arg))
    if amax > EXP_ARG_CAP:
        raise BlowUpError(max_u=float(np.max(u.values)), cap=EXP_ARG_CAP * inst.n / 2.0)
    return np.exp(arg)


def residual(inst: ProblemInstance, u: ScalarField) -> ScalarField:
    """F(u) = −Δu + α − S e^{2u/n}; a solution has ‖F(u)‖_∞ ≈ 0."""
    plan = spectral.get_plan(inst.domain)
    lap = spectral.laplacian(plan, u)
    vals = -lap.values + inst.alpha - inst.S.values * conformal_factor(inst, u)
    return ScalarField(inst.domain, vals)


def energy(inst: ProblemInstance, u: ScalarField) -> EnergyBreakdown:
    """I(u) = ∫(|∇u|² + 2αu − nS e^{2u/n})."""
    plan = spectral.get_plan(inst.domain)
    gsq = spectral.grad_norm_sq(plan, u)
    w = inst.domain.cell_weight
    dirichlet = float(np.sum(gsq.values)) * w
    linear = 2.0 * inst.alpha * float(np.sum(u.values)) * w
    exponential = -inst.n * float(np.sum(inst.S.values * conformal_factor(inst, u))) * w
    return EnergyBreakdown(dirichlet=dirichlet, linear=linear, exponential=exponential)


def energy_gradient(inst: ProblemInstance, u: ScalarField) -> ScalarField:
    """L² gradient of I at u. Identically 2·residual (same code path)."""
    r = residual(inst, u)
    return ScalarField(inst.domain, 2.0 * r.values)


def hessian_apply(inst: ProblemInstance, u: ScalarField, phi: ScalarField) -> ScalarField:
    """Second variation applied to φ: 2·(−Δφ − (2/n) S e^{2u/n} φ)."""
    if phi.domain != inst.domain:
        raise DomainError("phi lives on a different domain")
    plan = spectral.get_plan(inst.domain)
    lap = spectral.laplacian(plan, phi)
    ef = conformal_factor(inst, u)
    vals = 2.0 * (-lap.values - (2.0 / inst.n) * inst.S.values * ef * phi.values)
    return ScalarField(inst.domain, vals)


def stability_potential(inst: ProblemInstance, u: ScalarField) -> ScalarField:
    """V = −(2/n) S e^{2u/n}: potential of the stability operator −Δ + V."""
    vals = -(2.0 / inst.n) * inst.S.values * conformal_factor(inst, u)
    return ScalarField(inst.domain, vals)


class IdentityCheck(NamedTuple):
    defect: float      # |∫S e^{2u/n} − α·Vol| / (|α|·Vol)
    exp_mass: float    # ∫S e^{2u/n}
    mass_negative: bool


def integral_identity_defect(inst: ProblemInstance, u: ScalarField) -> IdentityCheck:
    """Relative defect of the mean identity ∫ S e^{2u/n} = α·Vol.

    Near zero iff u solves the equation in the mean; the sign flag records
    the necessary condition ∫ S e^{2u/n} < 0.
    """
    mass = float(np.sum(inst.S.values * conformal_factor(inst, u))) * inst.domain.cell_weight
    target = inst.alpha * inst.domain.volume
    defect = abs(mass - target) / (abs(inst.alpha) * inst.domain.volume)
    return IdentityCheck(defect=defect, exp_mass=mass, mass_negative=mass < 0)
