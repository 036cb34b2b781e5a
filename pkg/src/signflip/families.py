"""Exponential-family distributions with canonical links.

Each family bundles the cumulant ``b`` and its derivatives, the canonical
link pair, the response variance function and the log-density normalizer.
The per-observation log density is ``(y*eta - b(eta))/a + c(y)`` with the
dispersion ``a`` equal to 1 for every fitting family (the gaussian scale
is pinned to 1; the flip tests are invariant to that constant).

The negative binomial is included as a data-generating family only: its
variance function and canonical pair are available for checks and
simulation, but it refuses to be used as a fitting target.
"""

import numpy as np
from scipy.special import expit, gammaln, xlogy

from .exceptions import DesignError

__all__ = [
    "Family",
    "Gaussian",
    "Poisson",
    "Binomial",
    "NegativeBinomial",
    "family_from_name",
]


class Family:
    """Canonical-link exponential family on the observation scale."""

    name = "family"
    can_fit = True

    # cumulant and derivatives
    def b(self, eta):
        raise NotImplementedError

    def b_prime(self, eta):
        """Mean function: mu = b'(eta)."""
        raise NotImplementedError

    def b_double_prime(self, eta):
        raise NotImplementedError

    # canonical link pair
    def link(self, mu):
        raise NotImplementedError

    def inv_link(self, eta):
        return self.b_prime(eta)

    def variance(self, mu):
        """Response variance at mean ``mu`` (observation scale)."""
        raise NotImplementedError

    def dispersion(self, n):
        """Per-observation dispersion a_i; 1 for every fitting family."""
        return np.ones(n)

    def log_normalizer(self, y):
        """c(y) in the log density."""
        raise NotImplementedError

    def validate_response(self, y):
        raise NotImplementedError

    def initial_mean(self, y):
        """Starting values for IRLS, strictly inside the mean range."""
        raise NotImplementedError

    def valid_mean(self, mu):
        """True when every fitted mean lies strictly inside the valid range."""
        raise NotImplementedError

    def deviance(self, y, mu):
        raise NotImplementedError

    def log_density(self, y, eta):
        """Per-observation log density at the linear predictor ``eta``."""
        a = self.dispersion(np.shape(y)[0] if np.ndim(y) else 1)
        return (y * eta - self.b(eta)) / a + self.log_normalizer(y)

    def __repr__(self):
        return f"{type(self).__name__}()"


class Gaussian(Family):
    """Normal model with identity link; scale fixed at 1."""

    name = "gaussian"

    def b(self, eta):
        return 0.5 * np.square(eta)

    def b_prime(self, eta):
        return np.asarray(eta, dtype=float)

    def b_double_prime(self, eta):
        return np.ones_like(np.asarray(eta, dtype=float))

    def link(self, mu):
        return np.asarray(mu, dtype=float)

    def variance(self, mu):
        return np.ones_like(np.asarray(mu, dtype=float))

    def log_normalizer(self, y):
        return -0.5 * np.square(y) - 0.5 * np.log(2.0 * np.pi)

    def validate_response(self, y):
        if not np.all(np.isfinite(y)):
            raise DesignError("gaussian response must be finite")

    def initial_mean(self, y):
        return np.asarray(y, dtype=float)

    def valid_mean(self, mu):
        return bool(np.all(np.isfinite(mu)))

    def deviance(self, y, mu):
        return float(np.sum(np.square(y - mu)))


class Poisson(Family):
    """Poisson model with log link."""

    name = "poisson"

    def b(self, eta):
        return np.exp(eta)

    def b_prime(self, eta):
        return np.exp(eta)

    def b_double_prime(self, eta):
        return np.exp(eta)

    def link(self, mu):
        return np.log(mu)

    def variance(self, mu):
        return np.asarray(mu, dtype=float)

    def log_normalizer(self, y):
        return -gammaln(np.asarray(y, dtype=float) + 1.0)

    def validate_response(self, y):
        y = np.asarray(y)
        if np.any(y < 0) or np.any(y != np.floor(y)) or not np.all(np.isfinite(y)):
            raise DesignError("poisson response must be non-negative integers")

    def initial_mean(self, y):
        return np.asarray(y, dtype=float) + 0.5

    def valid_mean(self, mu):
        mu = np.asarray(mu)
        return bool(np.all(np.isfinite(mu)) and np.all(mu > 0.0))

    def deviance(self, y, mu):
        return float(2.0 * np.sum(xlogy(y, y) - xlogy(y, mu) - (y - mu)))


class Binomial(Family):
    """Binomial counts with logit link and per-observation trials.

    Responses are success counts out of ``trials`` (scalar or n-vector,
    default 1, i.e. Bernoulli).  The dispersion is 1 on this scale and
    the IRLS weight is m*p*(1-p).
    """

    name = "binomial"

    def __init__(self, trials=1):
        trials = np.asarray(trials, dtype=float)
        if np.any(trials < 1) or np.any(trials != np.floor(trials)):
            raise DesignError("binomial trial counts must be positive integers")
        self.trials = trials

    def b(self, eta):
        return self.trials * np.logaddexp(0.0, eta)

    def b_prime(self, eta):
        return self.trials * expit(eta)

    def b_double_prime(self, eta):
        p = expit(eta)
        return self.trials * p * (1.0 - p)

    def link(self, mu):
        mu = np.asarray(mu, dtype=float)
        return np.log(mu / (self.trials - mu))

    def variance(self, mu):
        # count-scale variance m*p*(1-p); the proportion y/m has var p(1-p)/m
        mu = np.asarray(mu, dtype=float)
        return mu * (1.0 - mu / self.trials)

    def log_normalizer(self, y):
        y = np.asarray(y, dtype=float)
        m = self.trials
        return gammaln(m + 1.0) - gammaln(y + 1.0) - gammaln(m - y + 1.0)

    def validate_response(self, y):
        y = np.asarray(y)
        if np.any(y < 0) or np.any(y > self.trials) or np.any(y != np.floor(y)):
            raise DesignError("binomial response must be counts in [0, trials]")

    def initial_mean(self, y):
        y = np.asarray(y, dtype=float)
        return self.trials * (y + 0.5) / (self.trials + 1.0)

    def valid_mean(self, mu):
        mu = np.asarray(mu)
        return bool(
            np.all(np.isfinite(mu)) and np.all(mu > 0.0) and np.all(mu < self.trials)
        )

    def deviance(self, y, mu):
        y = np.asarray(y, dtype=float)
        m = self.trials
        dev = xlogy(y, y) - xlogy(y, mu)
        dev += xlogy(m - y, m - y) - xlogy(m - y, m - mu)
        return float(2.0 * np.sum(dev))

    def __repr__(self):
        return f"Binomial(trials={self.trials!r})"


class NegativeBinomial(Family):
    """Negative binomial with known shape theta; generation/checks only.

    var(Y) = mu + mu^2/theta, so theta = 1 doubles-plus the Poisson
    variance at mu = 1 and theta -> inf recovers Poisson.  The canonical
    pair (eta = log(mu/(mu+theta))) is implemented for the family
    invariants, but this family cannot be a fitting target.
    """

    name = "negative-binomial"
    can_fit = False

    def __init__(self, theta):
        if not theta > 0:
            raise DesignError("negative-binomial theta must be positive")
        self.theta = float(theta)

    def b(self, eta):
        # natural domain eta < 0
        return -self.theta * np.log1p(-np.exp(eta))

    def b_prime(self, eta):
        e = np.exp(eta)
        return self.theta * e / (1.0 - e)

    def b_double_prime(self, eta):
        e = np.exp(eta)
        return self.theta * e / np.square(1.0 - e)

    def link(self, mu):
        mu = np.asarray(mu, dtype=float)
        return np.log(mu / (mu + self.theta))

    def variance(self, mu):
        mu = np.asarray(mu, dtype=float)
        return mu + np.square(mu) / self.theta

    def log_normalizer(self, y):
        y = np.asarray(y, dtype=float)
        t = self.theta
        return gammaln(y + t) - gammaln(t) - gammaln(y + 1.0)

    def validate_response(self, y):
        y = np.asarray(y)
        if np.any(y < 0) or np.any(y != np.floor(y)):
            raise DesignError("negative-binomial response must be non-negative integers")

    def initial_mean(self, y):
        return np.asarray(y, dtype=float) + 0.5

    def valid_mean(self, mu):
        mu = np.asarray(mu)
        return bool(np.all(np.isfinite(mu)) and np.all(mu > 0.0))

    def __repr__(self):
        return f"NegativeBinomial(theta={self.theta})"


def family_from_name(name, **kwargs):
    """Resolve a family by name: gaussian, poisson, binomial, negative-binomial."""
    table = {
        "gaussian": Gaussian,
        "poisson": Poisson,
        "binomial": Binomial,
        "negative-binomial": NegativeBinomial,
    }
    try:
        cls = table[name]
    except KeyError:
        raise DesignError(
            f"unknown family {name!r}; choose from {', '.join(sorted(table))}"
        ) from None
    return cls(**kwargs)
