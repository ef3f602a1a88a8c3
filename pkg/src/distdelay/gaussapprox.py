"""Gaussian approximations of MIMO mutual information for large arrays.

Moments are per channel use in nats. With ``I ~ N(mu, var)`` and a frame
carrying ``K eta`` uses, the Gaussian MGF gives per source sample

    E_c(theta) = eta mu - theta K eta^2 var / 2.
"""

import enum
import math
import warnings
from dataclasses import dataclass

from .specfun import DomainError


class GaussRegimeKind(str, enum.Enum):
    LARGE_MR = "large_mr_fixed_mt"
    LARGE_MT = "large_mt_fixed_mr"
    LARGE_BOTH = "large_both_fixed_beta_highsnr"


class UnsupportedRegimeError(NotImplementedError):
    pass


class NegativeCapacityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class GaussRegime:
    kind: GaussRegimeKind
    beta: float = None  # mr / mt, regime 3 only

    def __post_init__(self):
        object.__setattr__(self, "kind", GaussRegimeKind(self.kind))
        if self.kind is GaussRegimeKind.LARGE_BOTH:
            if self.beta is None or not self.beta > 0:
                raise ValueError("large_both regime needs beta = mr/mt > 0")
        elif self.beta is not None:
            raise ValueError("beta is only meaningful for the large_both regime")

    def check(self, mt, mr):
        if self.kind is GaussRegimeKind.LARGE_MR and mr < mt:
            raise ValueError(f"large_mr regime needs mr >= mt, got {mt}x{mr}")
        if self.kind is GaussRegimeKind.LARGE_MT and mt < mr:
            raise ValueError(f"large_mt regime needs mt >= mr, got {mt}x{mr}")


LARGE_MR = GaussRegime(GaussRegimeKind.LARGE_MR)
LARGE_MT = GaussRegime(GaussRegimeKind.LARGE_MT)


def gauss_moments(regime, mt, mr, rho):
    """Mean and variance of the mutual information per channel use."""
    if rho <= 0:
        raise DomainError("rho must be positive")
    regime.check(mt, mr)
    if regime.kind is GaussRegimeKind.LARGE_MR:
        return mt * math.log1p(mr * rho / mt), mt / mr
    if regime.kind is GaussRegimeKind.LARGE_MT:
        # variance written as rho^2 / (1 + rho)^2, as the MGF derivation requires
        return mr * math.log1p(rho), mr * rho**2 / (mt * (1.0 + rho) ** 2)
    raise UnsupportedRegimeError(
        "the large_both regime is available at exponent level only; see exponent_gauss_regime3")


def effcap_gauss(regime, mt, mr, rho, qos):
    """Effective capacity in nats per source sample."""
    mu, var = gauss_moments(regime, mt, mr, rho)
    eta = qos.eta
    value = eta * mu - 0.5 * qos.theta * qos.k * eta**2 * var
    if value < 0:
        warnings.warn(f"Gaussian effective capacity is negative ({value:.4g}); theta too large "
                      "for the approximation", NegativeCapacityWarning, stacklevel=2)
    return value


def distortion_gauss(regime, mt, mr, rho, eta, tau_n, exact_mgf=False):
    """Distortion at normalized delay ``tau_n`` under the Gaussian model.

    Regime 1 (large ``mr``):
    ``[1 + mr rho/mt - exp(var eta^2 / (2 tau_n))]^(-mt eta)`` with
    ``var = mt/mr``; regime 2 is ``[1 + rho - exp(...)]^(-mr eta)`` with its
    own variance. ``exact_mgf=True`` returns
    ``exp(-eta mu + eta^2 var / (2 tau_n))`` instead, which is what the
    Gaussian MGF gives without the bracket rearrangement.
    """
    if eta <= 0 or tau_n <= 0:
        raise DomainError("eta and tau_n must be positive")
    mu, var = gauss_moments(regime, mt, mr, rho)
    if exact_mgf:
        return math.exp(-eta * mu + 0.5 * eta**2 * var / tau_n)
    if regime.kind is GaussRegimeKind.LARGE_MR:
        n, snr_term = mt, mr * rho / mt
    else:
        n, snr_term = mr, rho
    spread = 0.5 * var * eta**2 / tau_n
    base = 1.0 + snr_term - math.exp(spread) if spread < math.log1p(snr_term) else 0.0
    if not base > 0:
        raise DomainError(f"bracket {base:.4g} <= 0: delay too small for the Gaussian form")
    return math.exp(-n * eta * math.log(base))


def exponent_gauss_regime3(mt, mr, eta):
    """SNR exponent ``min(mt, mr) eta`` in the joint large-array regime."""
    if eta < 0:
        raise ValueError("eta must be >= 0")
    return float(min(mt, mr) * eta)
