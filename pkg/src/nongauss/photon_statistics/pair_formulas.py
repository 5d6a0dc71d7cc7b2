"""Click statistics of two-mode squeezed pair sources.

Layout: each arm of the pair source is split on a beamsplitter onto two
detectors.  Success is a coincidence between the designated detector of
arm a (splitter transmission t_bs) and of arm b (t_bs_b).  Error is a
coincidence between the two detectors of one arm, averaged over arms.

Per mode, the photon number in each arm follows P(n) = (1 - mu) mu**n,
perfectly correlated between arms.  The probability generating function
of that distribution is Q(x) = (1 - mu) / (1 - mu x), and every no-click
probability below is a product of such factors.  All expressions are
arranged so that no large terms cancel, which keeps them accurate down
to probabilities of order 1e-300.
"""

import numpy as np

from ..errors import DomainError
from .types import ClickProbabilities, DetectionConfig, ModeEnsemble


def _check_mu(mu):
    if not (0.0 <= mu < 1.0):
        raise DomainError(f"pair brightness must lie in [0, 1), got {mu}")


def _with_dark(p_coinc, p_any_1, p_any_2, p_any_both, dark):
    """Exact dark-count correction to a two-detector coincidence.

    p_coinc is the dark-free coincidence, p_any_* the dark-free click
    probabilities of each detector alone and of their union.  Dark
    clicks are independent with probability `dark` per detector.
    """
    if dark == 0.0:
        return p_coinc
    # 1 - k q1 - k q2 + k^2 q12 expanded around the dark-free value,
    # with k = 1 - dark and q's the no-click complements.
    return (
        p_coinc
        + dark * (2.0 * p_any_both - p_any_1 - p_any_2)
        + dark * dark * (1.0 - p_any_both)
    )


def tmsv_pair_click_probs(mu, config=DetectionConfig()):
    """Success and error coincidence probabilities of a single pair mode.

    Cancellation-free rational forms in mu and the detector
    transmissions; exact for any mu in [0, 1).
    """
    _check_mu(mu)
    eta, ta, tb = config.eta, config.t_bs, config.t_bs_b
    dark = config.dark_count_prob

    x1, x2 = 1.0 - eta * ta, 1.0 - eta * tb
    x3 = x1 * x2
    p_s = (
        mu * (1.0 - x1) * (1.0 - x2) * (1.0 - mu * mu * x3)
        / ((1.0 - mu * x1) * (1.0 - mu * x2) * (1.0 - mu * x3))
    )
    p_s = _with_dark(p_s, _click_one(mu, x1), _click_one(mu, x2), _click_one(mu, x3), dark)

    def error_arm(t):
        a, b, c = 1.0 - eta * t, 1.0 - eta * (1.0 - t), 1.0 - eta
        p = (
            mu * mu * (1.0 - a) * (1.0 - b) * (2.0 - mu * (a + b))
            / ((1.0 - mu * a) * (1.0 - mu * b) * (1.0 - mu * c))
        )
        return _with_dark(p, _click_one(mu, a), _click_one(mu, b), _click_one(mu, c), dark)

    p_e = 0.5 * (error_arm(ta) + error_arm(tb))
    return ClickProbabilities(p_s, p_e, meta={"mu": mu, "n_modes": 1})


def _click_one(mu, x):
    # 1 - Q(x) for a single geometric mode, stable for small mu.
    return mu * (1.0 - x) / (1.0 - mu * x)


def _click_any(mus, x):
    # 1 - prod_i Q_i(x), stable when every factor is close to one.
    q = mus * (1.0 - x) / (1.0 - mus * x)
    return -np.expm1(np.sum(np.log1p(-q)))


def _correlated_excess(mus, qc, qab, diff):
    """Telescoped prod Q_i(c) - prod Q_i(a) Q_i(b).

    diff holds the per-mode difference qc_i - qab_i in a pre-cancelled
    form; the telescoping keeps the total exact even when both products
    are within 1e-16 of each other.
    """
    pref = np.concatenate([[1.0], np.cumprod(qc[:-1])])
    suff = np.concatenate([np.cumprod(qab[::-1])[::-1][1:], [1.0]])
    return float(np.sum(pref * diff * suff))


def multimode_pair_click_probs(ensemble, config=DetectionConfig()):
    """Coincidence probabilities for independent pair modes.

    Generalizes tmsv_pair_click_probs to an ensemble of modes with
    individual brightness; a detector responds to photons from any
    mode.  Reduces to the single-mode result for one mode.
    """
    if not isinstance(ensemble, ModeEnsemble):
        ensemble = ModeEnsemble(tuple(ensemble))
    mus = np.asarray(ensemble.pair_brightness, dtype=float)
    eta, ta, tb = config.eta, config.t_bs, config.t_bs_b
    dark = config.dark_count_prob

    def coincidence(a, b, c, diff):
        qc = (1.0 - mus) / (1.0 - mus * c)
        qab = (1.0 - mus) ** 2 / ((1.0 - mus * a) * (1.0 - mus * b))
        p_a, p_b, p_c = _click_any(mus, a), _click_any(mus, b), _click_any(mus, c)
        p = p_a * p_b + _correlated_excess(mus, qc, qab, diff)
        return _with_dark(p, p_a, p_b, p_c, dark)

    x1, x2 = 1.0 - eta * ta, 1.0 - eta * tb
    denom_s = (1.0 - mus * x1 * x2) * (1.0 - mus * x1) * (1.0 - mus * x2)
    diff_s = (1.0 - mus) * mus * (1.0 - x1) * (1.0 - x2) / denom_s
    p_s = coincidence(x1, x2, x1 * x2, diff_s)

    def error_arm(t):
        a, b, c = 1.0 - eta * t, 1.0 - eta * (1.0 - t), 1.0 - eta
        denom = (1.0 - mus * c) * (1.0 - mus * a) * (1.0 - mus * b)
        diff = (1.0 - mus) * mus * mus * (1.0 - a) * (1.0 - b) / denom
        return coincidence(a, b, c, diff)

    p_e = 0.5 * (error_arm(ta) + error_arm(tb))
    return ClickProbabilities(
        min(max(p_s, 0.0), 1.0),
        min(max(p_e, 0.0), 1.0),
        meta={"n_modes": ensemble.n_modes},
    )


def multimode_click_rates(mus, eta, ta, tb):
    """Raw (p_success, p_error) for optimizer inner loops, no dark counts."""
    mus = np.asarray(mus, dtype=float)

    x1, x2 = 1.0 - eta * ta, 1.0 - eta * tb
    denom_s = (1.0 - mus * x1 * x2) * (1.0 - mus * x1) * (1.0 - mus * x2)
    diff_s = (1.0 - mus) * mus * (1.0 - x1) * (1.0 - x2) / denom_s
    qc = (1.0 - mus) / (1.0 - mus * x1 * x2)
    qab = (1.0 - mus) ** 2 / ((1.0 - mus * x1) * (1.0 - mus * x2))
    p_s = _click_any(mus, x1) * _click_any(mus, x2) + _correlated_excess(mus, qc, qab, diff_s)

    def error_arm(t):
        a, b, c = 1.0 - eta * t, 1.0 - eta * (1.0 - t), 1.0 - eta
        denom = (1.0 - mus * c) * (1.0 - mus * a) * (1.0 - mus * b)
        diff = (1.0 - mus) * mus * mus * (1.0 - a) * (1.0 - b) / denom
        qc_ = (1.0 - mus) / (1.0 - mus * c)
        qab_ = (1.0 - mus) ** 2 / ((1.0 - mus * a) * (1.0 - mus * b))
        return _click_any(mus, a) * _click_any(mus, b) + _correlated_excess(mus, qc_, qab_, diff)

    return p_s, 0.5 * (error_arm(ta) + error_arm(tb))


def tmsv_pair_click_probs_series(mu, config=DetectionConfig(), tail_tol=1e-18):
    """Oracle route: direct truncated sum over the pair number.

    Shares no algebra with the rational forms.  The truncation point is
    chosen so the neglected geometric tail is below tail_tol.
    """
    _check_mu(mu)
    if mu == 0.0:
        nmax = 2
    else:
        nmax = int(max(64, np.ceil(np.log(tail_tol) / np.log(mu)))) + 1
    n = np.arange(nmax)
    weights = (1.0 - mu) * mu**n

    eta, ta, tb = config.eta, config.t_bs, config.t_bs_b

    def click(x):
        return 1.0 - x**n

    p_s = float(np.sum(weights * click(1.0 - eta * ta) * click(1.0 - eta * tb)))

    def error_arm(t):
        a, b, c = 1.0 - eta * t, 1.0 - eta * (1.0 - t), 1.0 - eta
        return float(np.sum(weights * (1.0 - a**n - b**n + c**n)))

    p_e = 0.5 * (error_arm(ta) + error_arm(tb))
    dark = config.dark_count_prob
    if dark:
        def q(x):
            return float(np.sum(weights * x**n))
        k = 1.0 - dark
        qs1, qs2 = q(1.0 - eta * ta), q(1.0 - eta * tb)
        qs3 = q((1.0 - eta * ta) * (1.0 - eta * tb))
        p_s = 1.0 - k * qs1 - k * qs2 + k * k * qs3

        def error_arm_dark(t):
            a, b, c = 1.0 - eta * t, 1.0 - eta * (1.0 - t), 1.0 - eta
            return 1.0 - k * q(a) - k * q(b) + k * k * q(c)

        p_e = 0.5 * (error_arm_dark(ta) + error_arm_dark(tb))
    return ClickProbabilities(max(p_s, 0.0), max(p_e, 0.0), meta={"nmax": nmax})


def poisson_pair_click_probs(mean_pairs, config=DetectionConfig()):
    """Limit of many dim modes at fixed total mean pair number.

    Photon numbers become Poisson.  Same-arm detectors decouple in this
    limit, but the photons of one pair still go to opposite arms, so
    the cross-arm coincidence keeps a correlation excess linear in the
    pair number.
    """
    if mean_pairs < 0:
        raise DomainError(f"mean_pairs must be >= 0, got {mean_pairs}")
    m = mean_pairs
    eta, ta, tb = config.eta, config.t_bs, config.t_bs_b
    dark = config.dark_count_prob

    def click(kappa):
        return -np.expm1(-m * kappa)

    ka, kb = eta * ta, eta * tb
    excess = np.exp(-m * (ka + kb)) * np.expm1(m * ka * kb)
    p_s = click(ka) * click(kb) + excess
    p_s = _with_dark(p_s, click(ka), click(kb), click(ka + kb - ka * kb), dark)

    def error_arm(t):
        k1, k2 = eta * t, eta * (1.0 - t)
        # joint no-click exponent equals the sum of singles exponents
        # here, so the same-arm excess vanishes exactly
        return _with_dark(click(k1) * click(k2), click(k1), click(k2), click(eta), dark)

    p_e = 0.5 * (error_arm(ta) + error_arm(tb))
    return ClickProbabilities(p_s, p_e, meta={"mean_pairs": mean_pairs})
