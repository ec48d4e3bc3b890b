"""Sample moments with standard errors for iid draws and correlated chains.

Chain output is autocorrelated, so its standard errors use a batch-means
estimate of the effective sample size per series (coordinates and centred
products). For iid draws the effective size is the sample count.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SampleMoments:
    """Mean and covariance of a sample set together with their standard errors"""
    mean: np.ndarray
    cov: np.ndarray
    mean_se: np.ndarray
    cov_se: np.ndarray
    ess: np.ndarray  # per coordinate
    count: int

    @property
    def ess_min(self) -> float:
        return float(np.min(self.ess))


def batch_means_ess(series: np.ndarray, nu: float = 0.5) -> np.ndarray:
    """
    Effective sample size of every column of ``series`` via batch means.

    Batches have size floor(N**nu). The asymptotic variance is estimated as
    batch_size times the variance of the batch means.

    Args:
        series: (N, p) array of chain output
        nu: Batch size exponent

    Returns:
        (p,) array of effective sizes, clipped to [1, N]
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim == 1:
        series = series[:, np.newaxis]
    n = series.shape[0]
    batch_size = max(int(np.floor(n ** nu)), 1)
    num_batches = n // batch_size
    if num_batches < 2:
        return np.full(series.shape[1], float(n))

    # drop the oldest samples so the batches are complete
    trimmed = series[n - num_batches * batch_size:]
    batches = trimmed.reshape(num_batches, batch_size, -1).mean(axis=1)
    sigma_as = batch_size * np.var(batches, axis=0, ddof=1)
    lam = np.var(trimmed, axis=0, ddof=1)

    ess = np.full(series.shape[1], float(n))
    ok = sigma_as > 0
    ess[ok] = n * lam[ok] / sigma_as[ok]
    return np.clip(ess, 1.0, float(n))


def sample_moments(samples: np.ndarray, correlated: bool = False) -> SampleMoments:
    """
    Sample mean, unbiased sample covariance and their standard errors.

    Args:
        samples: (N, n) array, N >= 2
        correlated: True for MCMC output (batch-means ESS), False for iid draws

    Returns:
        SampleMoments
    """
    x = np.asarray(samples, dtype=np.float64)
    count, dim = x.shape
    mean = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    cov = 0.5 * (cov + cov.T)

    centred = x - mean
    iu, ju = np.triu_indices(dim)
    products = centred[:, iu] * centred[:, ju]

    if correlated:
        ess = batch_means_ess(x)
        ess_products = batch_means_ess(products)
    else:
        ess = np.full(dim, float(count))
        ess_products = np.full(len(iu), float(count))

    mean_se = x.std(axis=0, ddof=1) / np.sqrt(ess)
    product_se = products.std(axis=0, ddof=1) / np.sqrt(ess_products)
    cov_se = np.zeros((dim, dim))
    cov_se[iu, ju] = product_se
    cov_se[ju, iu] = product_se

    return SampleMoments(mean=mean, cov=cov, mean_se=mean_se, cov_se=cov_se, ess=ess, count=count)


def binomial_se(p: float, trials: int) -> float:
    """Standard error of a binomial proportion"""
    if trials <= 0:
        return float('nan')
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / trials))
