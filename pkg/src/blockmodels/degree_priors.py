"""Degree-generation priors and their penalty terms.

A degree-generated model scores a partition by the family log-likelihood
plus the log-probability of the observed degrees under per-block priors.
Supported block priors: a zero-inflated continuous power law with a lower
cutoff fixed at 1, and a Poisson pmf (used for blocks whose degrees are
known to be Poisson-like).  Hyperparameters left unset are refit from the
current partition on the fly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln, xlogy

from .graph import Degrees, Partition
from .likelihoods import ModelSpec, loglik

# Cap on fitted power-law exponents.  The exponent MLE diverges when every
# nonzero degree equals the cutoff; capping keeps objectives finite and
# matches the upper end of the bounded-fit search bracket.
ALPHA_MAX = 64.0

PRIOR_FAMILIES = ("powerlaw", "poisson")


@dataclass(frozen=True)
class BlockPrior:
    """Degree prior for one block (one direction).

    Fields set to None are refit from the current partition whenever the
    penalty is evaluated.  theta_max only affects sampling and bounded
    exponent estimation; the penalty uses the unbounded normalizer, since
    a bound above every observed degree only rescales the density.
    """

    family: str = "powerlaw"
    alpha: float | None = None
    beta: float | None = None
    theta_min: float = 1.0
    theta_max: float = math.inf
    mean: float | None = None

    def __post_init__(self):
        if self.family not in PRIOR_FAMILIES:
            raise ValueError(f"unknown prior family {self.family!r}")
        if self.alpha is not None and not self.alpha > 1.0:
            raise ValueError("alpha must be > 1")
        if self.beta is not None and not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if not self.theta_min > 0:
            raise ValueError("theta_min must be positive")
        if not self.theta_max > self.theta_min:
            raise ValueError("theta_max must exceed theta_min")
        if self.mean is not None and self.mean < 0:
            raise ValueError("mean must be non-negative")


@dataclass(frozen=True)
class DegreePrior:
    """Per-block priors, by direction.

    DC and ODC penalties use `total`; DDC uses `out` and `in_`, falling
    back to `total` when a direction is not given separately.
    """

    total: tuple[BlockPrior, ...] | None = None
    out: tuple[BlockPrior, ...] | None = None
    in_: tuple[BlockPrior, ...] | None = None

    @property
    def k(self) -> int:
        for grp in (self.total, self.out, self.in_):
            if grp is not None:
                return len(grp)
        raise ValueError("empty DegreePrior")

    def total_priors(self) -> tuple[BlockPrior, ...]:
        if self.total is None:
            raise ValueError("prior has no total-degree entries")
        return self.total

    def out_priors(self) -> tuple[BlockPrior, ...]:
        grp = self.out if self.out is not None else self.total
        if grp is None:
            raise ValueError("prior has no out-degree entries")
        return grp

    def in_priors(self) -> tuple[BlockPrior, ...]:
        grp = self.in_ if self.in_ is not None else self.total
        if grp is None:
            raise ValueError("prior has no in-degree entries")
        return grp


def fit_alpha(thetas, theta_min: float = 1.0) -> float:
    """Power-law exponent MLE 1 + n / sum(log(theta/theta_min)).

    Returns +inf when every value equals theta_min (degenerate fit).
    """
    arr = np.asarray(thetas, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("need at least one value")
    if np.any(arr < theta_min):
        raise ValueError("values must be >= theta_min")
    s = float(np.log(arr / theta_min).sum())
    if s <= 0.0:
        return math.inf
    return 1.0 + arr.size / s


def fit_beta(thetas) -> float:
    """Fraction of exactly-zero values."""
    arr = np.asarray(thetas, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("need at least one value")
    return float(np.count_nonzero(arr == 0) / arr.size)


def resolve_block_prior(prior: BlockPrior, values) -> BlockPrior:
    """Fill unset hyperparameters from the block's values.

    The fitted exponent is capped at ALPHA_MAX so degenerate blocks (all
    nonzero values at the cutoff) keep a finite penalty.
    """
    vals = np.asarray(values, dtype=np.float64)
    if prior.family == "poisson":
        if prior.mean is not None:
            return prior
        mean = float(vals.mean()) if vals.size else 0.0
        return replace(prior, mean=mean)
    beta = prior.beta
    if beta is None:
        beta = fit_beta(vals) if vals.size else 0.0
    alpha = prior.alpha
    if alpha is None:
        nonzero = vals[vals > 0]
        if nonzero.size:
            alpha = min(fit_alpha(nonzero, prior.theta_min), ALPHA_MAX)
        else:
            alpha = ALPHA_MAX
    return replace(prior, alpha=alpha, beta=beta)


def log_prior(thetas, priors, partition: Partition) -> float:
    """Sum of log prior densities of per-vertex propensities.

    Power-law blocks use the piecewise density: mass beta at 0, zero on
    (0, theta_min), and (1-beta)(alpha-1)/theta_min * (t/theta_min)^-alpha
    above the cutoff; values inside the gap are a contract violation.
    Poisson blocks use the pmf at the (integer) value.  All
    hyperparameters must be concrete; see resolve_block_prior.
    """
    arr = np.asarray(thetas, dtype=np.float64)
    if arr.size != partition.n:
        raise ValueError("theta/partition size mismatch")
    if len(priors) != partition.k:
        raise ValueError("need one BlockPrior per block")
    total = 0.0
    for r, bp in enumerate(priors):
        vals = arr[partition.g == r]
        if vals.size == 0:
            continue
        if bp.family == "poisson":
            mu = bp.mean
            if mu is None:
                raise ValueError("poisson prior has no mean; resolve it first")
            if mu == 0.0:
                total += 0.0 if not np.any(vals > 0) else -math.inf
            else:
                total += float(np.sum(xlogy(vals, mu) - mu - gammaln(vals + 1.0)))
            continue
        if bp.alpha is None or bp.beta is None:
            raise ValueError("power-law prior has unset hyperparameters; resolve it first")
        if np.any((vals > 0) & (vals < bp.theta_min)):
            raise ValueError("value in (0, theta_min) has zero prior density")
        z = int(np.count_nonzero(vals == 0))
        nz = vals[vals > 0]
        if z:
            total += z * math.log(bp.beta) if bp.beta > 0 else -math.inf
        if nz.size:
            c = (1.0 - bp.beta) * (bp.alpha - 1.0) / bp.theta_min
            if c <= 0:
                return -math.inf
            total += nz.size * math.log(c) - bp.alpha * float(np.log(nz / bp.theta_min).sum())
    return total


def _penalty_one_direction(dvals, partition: Partition, priors) -> float:
    resolved = [
        resolve_block_prior(bp, dvals[partition.g == r]) for r, bp in enumerate(priors)
    ]
    return log_prior(dvals, resolved, partition)


def dg_objective(model: ModelSpec, stats, deg: Degrees, partition: Partition, prior=None) -> float:
    """Degree-generated objective: family log-likelihood plus degree penalty.

    Propensities are taken to be the observed degrees; unset
    hyperparameters are refit per block for the given partition.
    """
    if prior is None:
        prior = model.degree_generated
    if prior is None:
        raise ValueError("model has no degree prior")
    base = loglik(model.family, stats)
    if model.family == "ddc":
        pen = _penalty_one_direction(deg.d_out, partition, prior.out_priors())
        pen += _penalty_one_direction(deg.d_in, partition, prior.in_priors())
    else:
        pen = _penalty_one_direction(deg.d_total, partition, prior.total_priors())
    return base + pen


# ---------------------------------------------------------------------------
# Census-based penalty: the same quantity computed from per-block summary
# statistics (count, zeros, sum of logs, sum, sum of log-factorials), which
# the incremental inference engine can maintain in O(1) per vertex move.
# ---------------------------------------------------------------------------

def block_penalty(prior: BlockPrior, n, z, sumlog, sumdeg, sumlgamma) -> float:
    """Penalty of one block from its degree census; scalar fast path."""
    if n == 0:
        return 0.0
    if prior.family == "poisson":
        mu = prior.mean if prior.mean is not None else sumdeg / n
        if sumdeg > 0 and mu <= 0:
            return -math.inf
        out = -n * mu - sumlgamma
        if sumdeg > 0:
            out += sumdeg * math.log(mu)
        return out
    if prior.theta_min != 1.0:
        raise ValueError("census penalty assumes theta_min == 1")
    y = n - z
    beta = prior.beta if prior.beta is not None else z / n
    if prior.alpha is not None:
        alpha = prior.alpha
    elif sumlog > 0.0:
        alpha = min(1.0 + y / sumlog, ALPHA_MAX)
    else:
        alpha = ALPHA_MAX
    val = 0.0
    if z:
        if beta <= 0:
            return -math.inf
        val += z * math.log(beta)
    if y:
        c = (1.0 - beta) * (alpha - 1.0)
        if c <= 0:
            return -math.inf
        val += y * math.log(c) - alpha * sumlog
    return val


def block_penalty_vec(prior: BlockPrior, n, z, sumlog, sumdeg, sumlgamma) -> np.ndarray:
    """Vectorized block_penalty over parallel census arrays."""
    n = np.asarray(n, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    sumlog = np.asarray(sumlog, dtype=np.float64)
    sumdeg = np.asarray(sumdeg, dtype=np.float64)
    sumlgamma = np.asarray(sumlgamma, dtype=np.float64)
    nz_blocks = n > 0
    safe_n = np.where(nz_blocks, n, 1.0)
    if prior.family == "poisson":
        mu = np.full_like(n, prior.mean) if prior.mean is not None else sumdeg / safe_n
        val = xlogy(sumdeg, mu) - n * mu - sumlgamma
        return np.where(nz_blocks, val, 0.0)
    if prior.theta_min != 1.0:
        raise ValueError("census penalty assumes theta_min == 1")
    y = n - z
    beta = np.full_like(n, prior.beta) if prior.beta is not None else z / safe_n
    if prior.alpha is not None:
        alpha = np.full_like(n, prior.alpha)
    else:
        alpha = np.where(
            sumlog > 0.0,
            np.minimum(1.0 + y / np.where(sumlog > 0.0, sumlog, 1.0), ALPHA_MAX),
            ALPHA_MAX,
        )
    val = xlogy(z, beta) + xlogy(y, (1.0 - beta) * (alpha - 1.0)) - alpha * sumlog
    return np.where(nz_blocks, val, 0.0)


# ---------------------------------------------------------------------------
# Bounded power-law estimation and sampling.
# ---------------------------------------------------------------------------

def _bounded_score(alpha, x_min, x_max, target):
    t = 1.0 / (alpha - 1.0)
    if math.isinf(x_max):
        t += math.log(x_min)
    else:
        a = x_min ** (1.0 - alpha)
        b = x_max ** (1.0 - alpha)
        t += (a * math.log(x_min) - b * math.log(x_max)) / (a - b)
    return t - target


def fit_alpha_bounded(samples, x_min: float, x_max: float = math.inf) -> float:
    """Exponent MLE for a power law truncated to [x_min, x_max].

    Solves the stationarity condition of the truncated log-likelihood by
    bisection on (1, 64]; with x_max = inf this reduces to the closed
    form 1 + n / sum(log(x/x_min)).
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("need at least one sample")
    if not x_min > 0 or not x_max > x_min:
        raise ValueError("need 0 < x_min < x_max")
    if float(arr.min()) < x_min or float(arr.max()) > x_max:
        raise ValueError("samples outside [x_min, x_max]")
    target = float(np.log(arr).mean())
    lo, hi = 1.0 + 1e-9, ALPHA_MAX
    flo = _bounded_score(lo, x_min, x_max, target)
    fhi = _bounded_score(hi, x_min, x_max, target)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError(
            f"no sign change on ({lo}, {hi}]: score {flo:.3g} .. {fhi:.3g}; "
            "exponent outside the search bracket"
        )
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _bounded_score(mid, x_min, x_max, target)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-12 and abs(fm) <= 1e-9:
            break
    return 0.5 * (lo + hi)


def truncated_power_law_mean(alpha: float, theta_min: float, theta_max: float) -> float:
    """Mean of a continuous power law truncated to [theta_min, theta_max]."""
    if not alpha > 1:
        raise ValueError("alpha must be > 1")
    if math.isinf(theta_max):
        if alpha <= 2:
            return math.inf
        return theta_min * (alpha - 1.0) / (alpha - 2.0)
    norm = theta_min ** (1.0 - alpha) - theta_max ** (1.0 - alpha)
    c = (alpha - 1.0) / norm
    if alpha == 2.0:
        return c * math.log(theta_max / theta_min)
    return c * (theta_max ** (2.0 - alpha) - theta_min ** (2.0 - alpha)) / (2.0 - alpha)


def solve_theta_min(alpha: float, theta_max: float, target_mean: float) -> float:
    """Lower cutoff making the truncated power-law mean hit target_mean."""
    from scipy.optimize import brentq

    if not 0 < target_mean < theta_max:
        raise ValueError("target mean must lie in (0, theta_max)")
    lo, hi = 1e-9, theta_max * (1.0 - 1e-12)
    return float(
        brentq(
            lambda t: truncated_power_law_mean(alpha, t, theta_max) - target_mean,
            lo,
            hi,
            xtol=1e-12,
            rtol=1e-14,
        )
    )


def sample_power_law(rng, alpha, theta_min, theta_max, beta=0.0, size=None):
    """Draw from the zero-inflated truncated power law by inverse CDF.

    With probability beta the draw is exactly 0; otherwise it is a
    continuous draw from the power law on [theta_min, theta_max].
    Deterministic given the generator state.
    """
    if not alpha > 1:
        raise ValueError("alpha must be > 1")
    if not 0 < theta_min < theta_max:
        raise ValueError("need 0 < theta_min < theta_max")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must be in [0, 1]")
    zero = rng.random(size) < beta
    u = rng.random(size)
    a = theta_min ** (1.0 - alpha)
    b = 0.0 if math.isinf(theta_max) else theta_max ** (1.0 - alpha)
    vals = (a - u * (a - b)) ** (1.0 / (1.0 - alpha))
    out = np.where(zero, 0.0, vals)
    return float(out) if size is None else out


# ---------------------------------------------------------------------------
# Gamma conjugate priors: closed-form marginal and empirical-Bayes fitting.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaHyper:
    """Gamma(shape, rate) hyperparameters per block, for out- and in-degrees."""

    alpha_out: np.ndarray
    beta_out: np.ndarray
    alpha_in: np.ndarray
    beta_in: np.ndarray

    def __post_init__(self):
        for arr in (self.alpha_out, self.beta_out, self.alpha_in, self.beta_in):
            if np.any(np.asarray(arr) <= 0):
                raise ValueError("Gamma hyperparameters must be positive")


def _gamma_marginal_terms(d, alpha, beta):
    d = np.asarray(d, dtype=np.float64)
    return (
        alpha * np.log(beta)
        + gammaln(alpha + d)
        - (alpha + d) * np.log(beta + 1.0)
        - gammaln(d + 1.0)
        - gammaln(alpha)
    )


def gamma_marginal_loglik(deg: Degrees, partition: Partition, hyper: GammaHyper) -> float:
    """Log marginal likelihood of the degrees with Gamma-distributed propensities.

    The propensity integral has a closed form because the Gamma prior is
    conjugate to the per-vertex Poisson factor; out- and in-degrees use
    their own per-block hyperparameters.
    """
    if deg.d_out is None or deg.d_in is None:
        raise ValueError("gamma marginal needs directed degrees")
    g = partition.g
    out = _gamma_marginal_terms(deg.d_out, np.asarray(hyper.alpha_out)[g], np.asarray(hyper.beta_out)[g])
    inn = _gamma_marginal_terms(deg.d_in, np.asarray(hyper.alpha_in)[g], np.asarray(hyper.beta_in)[g])
    return float(out.sum() + inn.sum())


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo, hi, tol=1e-10):
    """Golden-section maximization on [lo, hi]."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)


def _fit_gamma_block(ds, max_sweeps=200, tol=1e-8):
    """Coordinate-wise golden-section search on (log alpha, log beta)."""
    ds = np.asarray(ds, dtype=np.float64)
    lo, hi = math.log(1e-3), math.log(1e3)

    def obj(la, lb):
        return float(_gamma_marginal_terms(ds, math.exp(la), math.exp(lb)).sum())

    la = lb = 0.0
    best = obj(la, lb)
    for _ in range(max_sweeps):
        la = _golden_max(lambda x: obj(x, lb), lo, hi)
        lb = _golden_max(lambda x: obj(la, x), lo, hi)
        cur = obj(la, lb)
        if cur - best < tol:
            best = max(best, cur)
            break
        best = cur
    else:
        warnings.warn("gamma hyperparameter fit did not converge; returning best so far")
    return math.exp(la), math.exp(lb)


def fit_gamma_hyper(deg: Degrees, partition: Partition) -> GammaHyper:
    """Empirical-Bayes point estimates maximizing the Gamma marginal per block."""
    if deg.d_out is None or deg.d_in is None:
        raise ValueError("gamma fitting needs directed degrees")
    k = partition.k
    ao, bo = np.empty(k), np.empty(k)
    ai, bi = np.empty(k), np.empty(k)
    for r in range(k):
        mask = partition.g == r
        if not np.any(mask):
            raise ValueError(f"block {r} is empty")
        ao[r], bo[r] = _fit_gamma_block(deg.d_out[mask])
        ai[r], bi[r] = _fit_gamma_block(deg.d_in[mask])
    return GammaHyper(alpha_out=ao, beta_out=bo, alpha_in=ai, beta_in=bi)


# ---------------------------------------------------------------------------
# Prior configuration files: keyed text, one `key = value` per line.
# Keys are block.<r>[.out|.in].<field>; family is "powerlaw" or "poisson".
# ---------------------------------------------------------------------------

_FLOAT_FIELDS = ("alpha", "beta", "theta_min", "theta_max", "mean")


def parse_prior_config(lines) -> DegreePrior:
    groups: dict[str, dict[int, dict]] = {}
    for i, raw in enumerate(lines, start=1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ValueError(f"line {i}: expected key = value")
        key, val = (p.strip() for p in s.split("=", 1))
        parts = key.split(".")
        if parts[0] != "block" or len(parts) not in (3, 4):
            raise ValueError(f"line {i}: bad key {key!r}")
        try:
            r = int(parts[1])
        except ValueError:
            raise ValueError(f"line {i}: bad block index {parts[1]!r}") from None
        direction = "total" if len(parts) == 3 else parts[2]
        field = parts[-1]
        if direction not in ("total", "out", "in"):
            raise ValueError(f"line {i}: bad direction {direction!r}")
        if field == "family":
            fval = val
        elif field in _FLOAT_FIELDS:
            fval = math.inf if val.lower() in ("inf", "infinity") else float(val)
        else:
            raise ValueError(f"line {i}: unknown field {field!r}")
        groups.setdefault(direction, {}).setdefault(r, {})[field] = fval
    if not groups:
        raise ValueError("empty prior configuration")

    def build(dct):
        k = max(dct) + 1
        if sorted(dct) != list(range(k)):
            raise ValueError("prior blocks must be 0..k-1")
        return tuple(BlockPrior(**dct[r]) for r in range(k))

    return DegreePrior(
        total=build(groups["total"]) if "total" in groups else None,
        out=build(groups["out"]) if "out" in groups else None,
        in_=build(groups["in"]) if "in" in groups else None,
    )


def read_prior_config(path) -> DegreePrior:
    with open(path, encoding="utf-8") as fh:
        return parse_prior_config(fh)


def format_prior_config(prior: DegreePrior) -> str:
    lines = []
    for name, grp in (("", prior.total), (".out", prior.out), (".in", prior.in_)):
        if grp is None:
            continue
        for r, bp in enumerate(grp):
            lines.append(f"block.{r}{name}.family = {bp.family}")
            for field in _FLOAT_FIELDS:
                val = getattr(bp, field)
                if field == "theta_min" and val == 1.0:
                    continue
                if field == "theta_max" and math.isinf(val):
                    continue
                if val is not None:
                    lines.append(f"block.{r}{name}.{field} = {val}")
    return "\n".join(lines) + "\n"
