"""Gaussian-state moment calculus and click probabilities.

Quadrature convention: x = a + a*, p = -i(a - a*), so the vacuum
covariance is the identity.  A displaced squeezed vacuum with
displacement length d, squeezing r and relative angle theta has

    covariance = diag(exp(-2r), exp(+2r))
    mean       = d * (cos(theta), sin(theta))

and coherent amplitude of modulus d / 2.
"""

import math

import numpy as np

from ..errors import DomainError
from .types import ClickProbabilities, CovarianceForm, DetectionConfig, GaussianStateParams


def to_covariance(params):
    """Moments of a pure displaced squeezed vacuum state."""
    if not isinstance(params, GaussianStateParams):
        raise DomainError(f"expected GaussianStateParams, got {type(params).__name__}")
    d, r, theta = params.displacement_amplitude, params.squeezing, params.relative_angle
    cov = np.diag([np.exp(-2.0 * r), np.exp(2.0 * r)])
    mean = d * np.array([np.cos(theta), np.sin(theta)])
    return CovarianceForm(mean, cov)


def apply_loss(form, eta):
    """Uniform transmission eta on every mode, vacuum noise mixed in."""
    if not (0.0 < eta <= 1.0):
        raise DomainError(f"eta must lie in (0, 1], got {eta}")
    n = form.mean.size
    cov = eta * form.covariance + (1.0 - eta) * np.eye(n)
    return CovarianceForm(np.sqrt(eta) * form.mean, cov)


def beamsplit(form, t):
    """Split a single-mode state on a beamsplitter with a vacuum ancilla.

    Transmission t goes to output mode 0, reflection 1 - t to mode 1.
    """
    if form.n_modes != 1:
        raise DomainError(f"beamsplit expects a single-mode state, got {form.n_modes} modes")
    if not (0.0 < t < 1.0):
        raise DomainError(f"t must lie in (0, 1), got {t}")
    eye2 = np.eye(2)
    s = np.sqrt(t)
    c = np.sqrt(1.0 - t)
    sympl = np.block([[s * eye2, c * eye2], [-c * eye2, s * eye2]])
    mean_in = np.concatenate([form.mean, np.zeros(2)])
    cov_in = np.block(
        [[form.covariance, np.zeros((2, 2))], [np.zeros((2, 2)), eye2]]
    )
    return CovarianceForm(sympl @ mean_in, sympl @ cov_in @ sympl.T)


def no_click_probability(form, modes=None):
    """Probability that none of the selected modes triggers a click.

    A click is any nonzero photon number, so this is the vacuum overlap
    of the reduced state on `modes` (all modes when None).
    """
    if modes is None:
        modes = range(form.n_modes)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes]).astype(int)
    mean = form.mean[idx]
    cov = form.covariance[np.ix_(idx, idx)]
    m = idx.size // 2
    a = cov + np.eye(2 * m)
    det = np.linalg.det(a)
    quad = mean @ np.linalg.solve(a, mean)
    return float(2.0**m / np.sqrt(det) * np.exp(-0.5 * quad))


def no_click_after_loss(params, kappa, mathmod=math):
    """Vacuum-projection probability after transmitting a fraction kappa.

    Scalar closed form of loss followed by a vacuum overlap; agrees with
    the covariance pipeline but avoids matrix work.  `mathmod` may be
    the mpmath module when extra precision is needed downstream.
    """
    if not (0.0 <= kappa <= 1.0):
        raise DomainError(f"kappa must lie in [0, 1], got {kappa}")
    d, r, theta = params.displacement_amplitude, params.squeezing, params.relative_angle
    ax = kappa * mathmod.expm1(-2.0 * r) + 2.0
    ap = kappa * mathmod.expm1(2.0 * r) + 2.0
    cos2 = mathmod.cos(theta) ** 2
    quad = 0.5 * kappa * d * d * (cos2 / ax + (1.0 - cos2) / ap)
    return 2.0 * mathmod.exp(-quad) / mathmod.sqrt(ax * ap)


def compose_dark_counts(q_success, q_other, q_both, dark_count_prob):
    """Fold independent dark clicks into no-click probabilities."""
    keep = 1.0 - dark_count_prob
    return q_success * keep, q_other * keep, q_both * keep * keep


def single_photon_click_probs(params, config=DetectionConfig(), method="covariance"):
    """Click statistics of a state sent through loss and a splitter.

    Success: a click on the transmitted detector.  Error: clicks on
    both detectors in the same pulse.  `method` picks the moment
    pipeline ("covariance") or the equivalent scalar form ("scalar").
    """
    if method == "covariance":
        split = beamsplit(apply_loss(to_covariance(params), config.eta), config.t_bs)
        q1 = no_click_probability(split, [0])
        q2 = no_click_probability(split, [1])
        q12 = no_click_probability(split)
    elif method == "scalar":
        q1 = no_click_after_loss(params, config.eta * config.t_bs)
        q2 = no_click_after_loss(params, config.eta * (1.0 - config.t_bs))
        q12 = no_click_after_loss(params, config.eta)
    else:
        raise DomainError(f"unknown method {method!r}")
    q1, q2, q12 = compose_dark_counts(q1, q2, q12, config.dark_count_prob)
    p_success = 1.0 - q1
    p_error = 1.0 - q1 - q2 + q12
    # Tiny negative values can appear from rounding when p_error ~ 1e-17.
    return ClickProbabilities(
        p_success=min(max(p_success, 0.0), 1.0),
        p_error=min(max(p_error, 0.0), 1.0),
        meta={"q_success": q1, "q_other": q2, "q_both": q12, "method": method},
    )
