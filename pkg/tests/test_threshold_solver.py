import numpy as np
import pytest

from nongauss import DomainError, SolverError
from nongauss.threshold_solver import (
    OptimizationConfig,
    PairThresholdModel,
    SinglePhotonThresholdModel,
    SplitterThresholdModel,
    ThresholdCurve,
    approx_single_threshold,
    asymptotic_pair_threshold,
    finite_difference_eta_sensitivity,
    maximize_pair_rate,
    maximize_single_rate,
    pair_threshold_curve,
    simple_bs_criterion,
    single_threshold_curve,
)


def test_single_model_closed_form():
    assert SinglePhotonThresholdModel(1.0).coefficient == pytest.approx(0.25)
    assert SinglePhotonThresholdModel(0.5).coefficient == pytest.approx(1.0 / 12.0)
    model = SinglePhotonThresholdModel(0.6)
    pe = 1e-9
    assert model.value(pe) == pytest.approx((model.coefficient * pe) ** (1 / 3), rel=1e-12)
    # slope and efficiency sensitivity against numeric derivatives
    h = 1e-6
    num_slope = (model.value(pe * (1 + h)) - model.value(pe * (1 - h))) / (2 * h * pe)
    assert model.slope(pe) == pytest.approx(num_slope, rel=1e-6)
    num_eta = (
        SinglePhotonThresholdModel(0.6 + h).value(pe)
        - SinglePhotonThresholdModel(0.6 - h).value(pe)
    ) / (2 * h)
    assert model.eta_sensitivity(pe) == pytest.approx(num_eta, rel=1e-6)


def test_pair_model_closed_form():
    model = PairThresholdModel(0.1467)
    pe = 2.926e-8
    first = 0.5 * 0.1467 * np.sqrt(pe)
    assert model.value(pe) == pytest.approx(first + model.curvature * pe, rel=1e-12)
    assert asymptotic_pair_threshold(pe, 0.1467) == pytest.approx(model.value(pe))
    h = 1e-6
    num_slope = (model.value(pe * (1 + h)) - model.value(pe * (1 - h))) / (2 * h * pe)
    assert model.slope(pe) == pytest.approx(num_slope, rel=1e-6)
    num_eta = (
        PairThresholdModel(0.1467 + h).value(pe) - PairThresholdModel(0.1467 - h).value(pe)
    ) / (2 * h)
    assert model.eta_sensitivity(pe) == pytest.approx(num_eta, rel=1e-6)


def test_splitter_bound_round_trip():
    assert simple_bs_criterion(1e-3, 0.5) == pytest.approx(4e-9, rel=1e-12)
    model = SplitterThresholdModel(0.5166)
    for p in (1e-4, 1e-2):
        assert model.value(simple_bs_criterion(p, 0.5166)) == pytest.approx(p, rel=1e-12)
    # balanced splitter without loss reproduces the single-photon model
    assert SplitterThresholdModel(0.5).coefficient == pytest.approx(
        SinglePhotonThresholdModel(1.0).coefficient
    )
    with pytest.raises(DomainError):
        simple_bs_criterion(1e-3, 1.0)


@pytest.mark.parametrize("eta", [1.0, 0.5])
def test_single_optimum_reaches_cubic_limit(eta):
    opt = maximize_single_rate(1e8, eta)
    c = eta / (4.0 * (2.0 - eta))
    assert opt.p_success**3 / opt.p_error == pytest.approx(c, rel=2e-3)
    # optimum sits on the two-photon cancellation locus
    assert opt.params["squeezing"] == pytest.approx(
        (opt.params["displacement_amplitude"] / 2.0) ** 2, rel=0.1
    )


def test_pair_optimum_reaches_sqrt_limit():
    eta, n = 0.5, 2
    opt = maximize_pair_rate(1e5, eta, n_modes=n)
    coeff = eta * n / (2.0 * np.sqrt(n * (n + 1.0)))
    assert opt.p_success / np.sqrt(opt.p_error) == pytest.approx(coeff, rel=1e-4)
    mus = opt.params["pair_brightness"]
    assert max(mus) / min(mus) == pytest.approx(1.0, rel=1e-3)


def test_single_curve_sweep():
    cfg = OptimizationConfig(alpha_min=1e2, alpha_max=1e8, n_points=7)
    curve = single_threshold_curve(0.5, config=cfg)
    assert curve.kind == "single"
    assert np.all(np.diff(curve.p_error) > 0)
    assert np.all(curve.residuals <= cfg.residual_tol)
    pe = 1e-9
    assert curve.value(pe) == pytest.approx(approx_single_threshold(pe, 0.5), rel=0.02)
    assert curve.slope(pe) > 0
    with pytest.raises(DomainError):
        curve.value(1e3 * curve.p_error[-1])


def test_pair_curve_sweep():
    cfg = OptimizationConfig(alpha_min=1e2, alpha_max=1e8, n_points=7)
    curve = pair_threshold_curve(0.5, n_modes=1, config=cfg)
    pe = 1e-8
    coeff = 0.5 * 1 / (2.0 * np.sqrt(2.0))
    assert curve.value(pe) == pytest.approx(coeff * np.sqrt(pe), rel=0.02)
    assert curve.n_modes == 1
    assert curve.meta["objective"] == "p_success - alpha * p_error"


def test_curve_validation():
    with pytest.raises(DomainError):
        ThresholdCurve("other", 0.5, 0.5, 1, [1.0], [1e-8], [1e-4], [0.0], ({},))
    with pytest.raises(DomainError):
        ThresholdCurve("pair", 0.5, 0.5, 1, [1.0], [0.0], [1e-4], [0.0], ({},))


def test_finite_difference_eta_sensitivity():
    def curve_from_model(eta):
        pe = np.geomspace(1e-10, 1e-4, 25)
        model = PairThresholdModel(eta)
        return ThresholdCurve(
            "pair", eta, 0.5, 0, np.full(pe.size, np.nan), pe, model.value(pe),
            np.zeros(pe.size), tuple({} for _ in pe),
        )

    lo, hi = curve_from_model(0.49), curve_from_model(0.51)
    sens = finite_difference_eta_sensitivity(lo, hi)
    expected = PairThresholdModel(0.5).eta_sensitivity(1e-7)
    assert sens(1e-7) == pytest.approx(float(expected), rel=1e-3)
    with pytest.raises(DomainError):
        finite_difference_eta_sensitivity(hi, lo)


def test_solver_error_paths():
    with pytest.raises(DomainError):
        maximize_single_rate(0.0, 0.5)
    with pytest.raises(DomainError):
        maximize_pair_rate(1e3, 0.5, n_modes=0)
    cfg = OptimizationConfig(maxiter=3, warm_maxiter=3, residual_tol=1e-12)
    with pytest.raises(SolverError) as exc:
        maximize_single_rate(1e6, 0.5, config=cfg)
    assert exc.value.best_point is not None
    with pytest.raises(DomainError):
        OptimizationConfig(alpha_min=0.0).alpha_grid()
