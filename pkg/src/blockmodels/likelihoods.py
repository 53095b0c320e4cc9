"""Profile log-likelihoods of the Poisson block-model family.

All values are in nats and omit partition-independent additive constants
(degree factorials and sum-of-d-log-d terms), so they are comparable
across partitions within one model family but not across families.
0*log(0) terms contribute 0; empty blocks contribute 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import xlogy

if TYPE_CHECKING:  # pragma: no cover
    from .degree_priors import DegreePrior

from .graph import BlockStats, Degrees

FAMILIES = ("sbm", "dc", "ddc", "odc")
MODEL_NAMES = ("sbm", "dc", "ddc", "odc", "dg-dc", "dg-ddc", "dg-odc")


@dataclass(frozen=True)
class ModelSpec:
    """Likelihood family, optionally wrapped with degree generation."""

    family: str
    degree_generated: "DegreePrior | None" = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")

    @property
    def needs_directed(self) -> bool:
        return self.family in ("ddc", "odc")

    @property
    def name(self) -> str:
        return ("dg-" if self.degree_generated is not None else "") + self.family


def _profile_sum(m, denom) -> float:
    """Sum of m * log(m / denom); m = 0 terms contribute 0."""
    m = np.asarray(m, dtype=np.float64)
    safe = np.where(denom > 0, denom, 1.0)
    return float(np.sum(xlogy(m, m) - m * np.log(safe)))


def loglik_dc(stats: BlockStats) -> float:
    """Degree-corrected profile log-likelihood of an undirected multigraph."""
    if stats.directed:
        raise ValueError("dc likelihood needs undirected stats")
    k = stats.kappa_total.astype(np.float64)
    return 0.5 * _profile_sum(stats.m, np.outer(k, k))


def loglik_ddc(stats: BlockStats) -> float:
    """Directed degree-corrected profile log-likelihood."""
    if not stats.directed:
        raise ValueError("ddc likelihood needs directed stats")
    denom = np.outer(stats.kappa_out.astype(np.float64), stats.kappa_in.astype(np.float64))
    return _profile_sum(stats.m, denom)


def loglik_odc(stats: BlockStats) -> float:
    """Oriented degree-corrected profile log-likelihood (total-degree correction)."""
    if not stats.directed:
        raise ValueError("odc likelihood needs directed stats")
    k = stats.kappa_total.astype(np.float64)
    return _profile_sum(stats.m, np.outer(k, k))


def loglik_odc_decomposed(stats: BlockStats) -> tuple[float, float]:
    """Split the oriented log-likelihood into undirected and orientation terms.

    The first term scores the orientation-erased multigraph under degree
    correction; the second scores the edge orientations under the
    block-pair orientation probabilities at their MLE m_rs / (m_rs + m_sr).
    The two add up to loglik_odc exactly.
    """
    if not stats.directed:
        raise ValueError("odc likelihood needs directed stats")
    m = stats.m
    mbar = m + m.T
    k = stats.kappa_total.astype(np.float64)
    undirected = 0.5 * _profile_sum(mbar, np.outer(k, k))
    orientation = _profile_sum(m, mbar)
    return undirected, orientation


def loglik_sbm(stats: BlockStats) -> float:
    """Uncorrected (Poisson) block-model profile log-likelihood.

    Directed graphs must be projected to undirected before computing stats.
    Uses block sizes in place of degree sums; the dropped constants differ
    from the degree-corrected case, so values are not comparable across
    families.
    """
    if stats.directed:
        raise ValueError("sbm likelihood needs undirected stats (project directed input first)")
    n = stats.n_r.astype(np.float64)
    return 0.5 * _profile_sum(stats.m, np.outer(n, n))


_FAMILY_FUNCS = {"sbm": loglik_sbm, "dc": loglik_dc, "ddc": loglik_ddc, "odc": loglik_odc}


def loglik(model, stats: BlockStats) -> float:
    """Family profile log-likelihood; the degree-generation penalty is separate."""
    family = model.family if isinstance(model, ModelSpec) else model
    return _FAMILY_FUNCS[family](stats)


def loglik_ddc_unprofiled(stats: BlockStats, deg: Degrees, theta_out, theta_in, omega) -> float:
    """Directed degree-corrected log-likelihood at explicit parameter values.

    Up to the same constants dropped by the profile form:
    sum_u (d_out log theta_out + d_in log theta_in)
    + sum_rs (m_rs log omega_rs - kappa_out_r kappa_in_s omega_rs).
    Used to check that the closed-form MLEs are stationary points.
    """
    if not stats.directed:
        raise ValueError("needs directed stats")
    theta_out = np.asarray(theta_out, dtype=np.float64)
    theta_in = np.asarray(theta_in, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    val = float(np.sum(xlogy(deg.d_out, theta_out)) + np.sum(xlogy(deg.d_in, theta_in)))
    rates = np.outer(stats.kappa_out, stats.kappa_in) * omega
    val += float(np.sum(xlogy(stats.m, omega)) - rates.sum())
    return val


@dataclass(frozen=True)
class MLEParameters:
    """Closed-form parameter estimates; undefined entries carried as NaN."""

    omega: np.ndarray
    theta: np.ndarray | None = None
    theta_out: np.ndarray | None = None
    theta_in: np.ndarray | None = None
    rho: np.ndarray | None = None


def _ratio(num, denom) -> np.ndarray:
    out = np.full(np.shape(num), np.nan)
    np.divide(num, denom, out=out, where=denom > 0)
    return out


def mle_parameters(model, stats: BlockStats, deg: Degrees) -> MLEParameters:
    """Maximum-likelihood propensities and mixing matrix for one family.

    Entries whose normalizer is zero (empty blocks, zero degree sums, or
    zero symmetrized edge counts) are reported as NaN; they contribute
    nothing to the profile likelihood.
    """
    family = model.family if isinstance(model, ModelSpec) else model
    m = stats.m.astype(np.float64)
    if family == "sbm":
        n = stats.n_r.astype(np.float64)
        return MLEParameters(omega=_ratio(m, np.outer(n, n)))
    if family == "dc":
        k = stats.kappa_total.astype(np.float64)
        return MLEParameters(omega=_ratio(m, np.outer(k, k)), theta=deg.d_total.astype(np.float64))
    if family == "ddc":
        denom = np.outer(stats.kappa_out.astype(np.float64), stats.kappa_in.astype(np.float64))
        return MLEParameters(
            omega=_ratio(m, denom),
            theta_out=deg.d_out.astype(np.float64),
            theta_in=deg.d_in.astype(np.float64),
        )
    if family == "odc":
        k = stats.kappa_total.astype(np.float64)
        mbar = m + m.T
        return MLEParameters(
            omega=_ratio(mbar, np.outer(k, k)),
            theta=deg.d_total.astype(np.float64),
            rho=_ratio(m, mbar),
        )
    raise ValueError(f"unknown family {family!r}")
