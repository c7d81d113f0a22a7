"""End-to-end energy derivative assembly: closed forms, finite differences,
gauge shifts, Taylor tables, and the measurement-cost model."""

import json

import numpy as np
import pytest

from vqederiv.energy_derivatives import (
    BranchJumpError,
    StationarityError,
    StationarityWarning,
    _reoptimize,
    cost_estimate,
    energy_derivatives,
    fd_validate,
    taylor_pes,
)
from vqederiv.hamiltonians import HamiltonianFamily, Polynomial
from vqederiv.kernel import PauliString
from vqederiv.optimize import OptimizerConfig, optimize
from vqederiv.theta_derivatives import Backend

from instances import (
    model_circuit,
    model_family,
    model_theta_star,
    random_instance,
    random_polynomial_family,
)


def model_bundle(x, order=3, **kwargs):
    circuit = model_circuit()
    family = model_family()
    theta = [model_theta_star(x)]
    return energy_derivatives(circuit, theta, family, [x], order=order, **kwargs)


def closed_forms(x):
    s = 1.0 + x * x
    return -x / np.sqrt(s), -s**-1.5, 3.0 * x * s**-2.5


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0])
def test_model_derivative_chain(x):
    g, h2, t3 = closed_forms(x)
    bundle = model_bundle(x)
    assert abs(bundle.energy - (-np.sqrt(1.0 + x * x))) < 1e-10
    assert abs(bundle.grad_x[0] - g) < 1e-9
    assert abs(bundle.hessian_x[0, 0] - h2) < 1e-9
    assert abs(bundle.third_x[0, 0, 0] - t3) < 1e-9


def test_model_reference_values():
    bundle = model_bundle(1.0)
    assert bundle.grad_x[0] == pytest.approx(-0.7071068, abs=1e-7)
    assert bundle.hessian_x[0, 0] == pytest.approx(-0.3535534, abs=1e-7)
    assert bundle.third_x[0, 0, 0] == pytest.approx(0.5303301, abs=1e-7)


def test_order_one_stops_at_gradient():
    bundle = model_bundle(0.3, order=1)
    assert bundle.hessian_x is None
    assert bundle.third_x is None
    assert bundle.r1 is None
    assert bundle.provenance["order"] == 1


def optimum_for(circuit, family, x, seed_theta):
    config = OptimizerConfig(tol=1e-12, seeds=4)
    result = optimize(circuit, seed_theta, family.eval(x), config)
    assert result.converged
    return result.theta


@pytest.mark.parametrize("x_dim", [1, 2])
def test_simplified_and_unsimplified_third_agree(x_dim):
    circuit, _, theta0 = random_instance(83, n_qubits=2, n_params=4)
    family = random_polynomial_family(89, n_qubits=2, x_dim=x_dim)
    x = np.full(x_dim, 0.25)
    theta = optimum_for(circuit, family, x, theta0)
    simp = energy_derivatives(circuit, theta, family, x, order=3)
    unsimp = energy_derivatives(
        circuit, theta, family, x, order=3, unsimplified_third=True
    )
    assert np.max(np.abs(simp.third_x - unsimp.third_x)) < 1e-7
    assert simp.provenance["third_assembly"] == "simplified"
    assert unsimp.provenance["third_assembly"] == "unsimplified"
    assert unsimp.r2 is not None and simp.r2 is None


def test_tensor_symmetries_and_asymmetry_diagnostic():
    circuit, _, theta0 = random_instance(97, n_qubits=2, n_params=4)
    family = random_polynomial_family(101, n_qubits=2, x_dim=2)
    x = np.array([0.2, -0.3])
    theta = optimum_for(circuit, family, x, theta0)
    bundle = energy_derivatives(circuit, theta, family, x, order=3)
    assert np.array_equal(bundle.hessian_x, bundle.hessian_x.T)
    assert bundle.provenance["hessian_x_asymmetry"] < 1e-8
    t = bundle.third_x
    for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0), (1, 2, 0), (2, 0, 1)):
        assert np.max(np.abs(t - np.transpose(t, perm))) < 1e-12


def test_gauge_shift_moves_derivatives_by_coefficient_derivatives():
    # adding c(x) * Identity shifts each derivative by the matching c^(k)
    circuit, _, theta0 = random_instance(103, n_qubits=2, n_params=4)
    family = random_polynomial_family(107, n_qubits=2)
    coeff = Polynomial(1, (((0,), 2.0), ((1,), -1.3), ((3,), 0.7)))
    shifted = HamiltonianFamily(
        2,
        1,
        family.terms + ((PauliString.from_label("II"), coeff),),
    )
    x = np.array([0.4])
    theta = optimum_for(circuit, family, x, theta0)
    base = energy_derivatives(circuit, theta, family, x, order=3)
    gauged = energy_derivatives(circuit, theta, shifted, x, order=3)
    xv = x[0]
    c1 = -1.3 + 2.1 * xv * xv
    c2 = 4.2 * xv
    c3 = 4.2
    assert abs(gauged.grad_x[0] - base.grad_x[0] - c1) < 1e-10
    assert abs(gauged.hessian_x[0, 0] - base.hessian_x[0, 0] - c2) < 1e-10
    assert abs(gauged.third_x[0, 0, 0] - base.third_x[0, 0, 0] - c3) < 1e-10


def test_measured_backends_reproduce_exact_bundle():
    circuit, _, theta0 = random_instance(109, n_qubits=2, n_params=3)
    family = random_polynomial_family(113, n_qubits=2)
    x = np.array([0.3])
    theta = optimum_for(circuit, family, x, theta0)
    exact = energy_derivatives(circuit, theta, family, x, order=3)
    for kind in ("ancilla", "lowdepth"):
        got = energy_derivatives(
            circuit, theta, family, x, order=3, backend=Backend(kind)
        )
        assert abs(got.energy - exact.energy) < 1e-10
        assert np.max(np.abs(got.grad_x - exact.grad_x)) < 1e-10
        assert np.max(np.abs(got.hessian_x - exact.hessian_x)) < 1e-10
        assert np.max(np.abs(got.third_x - exact.third_x)) < 1e-9


def test_stationarity_guard():
    circuit = model_circuit()
    family = model_family()
    with pytest.raises(StationarityError, match="stationarity"):
        energy_derivatives(circuit, [1.0], family, [0.3], order=2)
    with pytest.warns(StationarityWarning):
        bundle = energy_derivatives(
            circuit, [1.0], family, [0.3], order=2, on_nonstationary="warn"
        )
    assert bundle.hessian_x is not None
    with pytest.raises(ValueError, match="on_nonstationary"):
        energy_derivatives(
            circuit, [1.0], family, [0.3], on_nonstationary="ignore"
        )


def test_input_validation():
    circuit = model_circuit()
    family = model_family()
    theta = [model_theta_star(0.0)]
    with pytest.raises(ValueError, match="order"):
        energy_derivatives(circuit, theta, family, [0.0], order=4)
    with pytest.raises(ValueError, match="x_dim"):
        energy_derivatives(circuit, theta, family, [0.0, 1.0])


# finite-difference validation


def test_fd_validate_model_order_two():
    report = fd_validate(model_family(), model_circuit(), [0.0], 2, 1e-3)
    assert report.abs_diff < 1e-6
    assert report.analytical == pytest.approx(-1.0, abs=1e-9)


def test_fd_validate_model_order_three():
    report = fd_validate(model_family(), model_circuit(), [1.0], 3, 3e-2)
    assert abs(report.analytical) > 0.1
    assert report.abs_diff / abs(report.analytical) < 1e-3


def test_fd_validate_order_one_vector():
    family = random_polynomial_family(127, n_qubits=2, x_dim=2)
    circuit, _, theta0 = random_instance(131, n_qubits=2, n_params=4)
    report = fd_validate(
        family, circuit, [0.2, -0.1], 1, 1e-3, theta=theta0
    )
    assert report.analytical.shape == (2,)
    assert np.max(report.abs_diff) < 1e-6


def test_fd_validate_x_independent_family():
    z = PauliString.from_label("ZZ")
    xx = PauliString.from_label("XX")
    family = HamiltonianFamily(
        2,
        1,
        (
            (z, Polynomial(1, (((0,), 1.0),))),
            (xx, Polynomial(1, (((0,), 0.4),))),
        ),
    )
    circuit, _, theta0 = random_instance(137, n_qubits=2, n_params=3)
    report = fd_validate(family, circuit, [0.7], 1, 1e-3, theta=theta0)
    assert report.analytical[0] == 0.0
    assert abs(report.numerical[0]) < 1e-8


def test_fd_validate_rejects_multicomponent_high_orders():
    family = random_polynomial_family(127, n_qubits=2, x_dim=2)
    circuit, _, theta0 = random_instance(131, n_qubits=2, n_params=4)
    with pytest.raises(ValueError, match="one-component"):
        fd_validate(family, circuit, [0.2, -0.1], 2, 1e-3, theta=theta0)


def test_fd_validate_argument_checks():
    with pytest.raises(ValueError, match="order"):
        fd_validate(model_family(), model_circuit(), [0.0], 0, 1e-3)
    with pytest.raises(ValueError, match="positive"):
        fd_validate(model_family(), model_circuit(), [0.0], 1, -1e-3)


def test_branch_jump_detection():
    circuit = model_circuit()
    family = model_family()
    x = np.array([0.0])
    far_start = np.array([model_theta_star(0.0) - 2.0])
    with pytest.raises(BranchJumpError, match="branch"):
        _reoptimize(circuit, family, x, far_start, OptimizerConfig(tol=1e-12, seeds=1))


def test_mixed_hessian_entry_matches_cross_stencil():
    circuit, _, theta0 = random_instance(139, n_qubits=2, n_params=4)
    family = random_polynomial_family(149, n_qubits=2, x_dim=2)
    x = np.array([0.15, -0.2])
    theta = optimum_for(circuit, family, x, theta0)
    bundle = energy_derivatives(circuit, theta, family, x, order=2)
    h = 1e-3
    config = OptimizerConfig(tol=1e-12, seeds=1)

    def estar(dx0, dx1):
        point = x + np.array([dx0, dx1])
        result = optimize(circuit, theta, family.eval(point), config)
        assert result.converged
        return result.energy

    fd = (
        estar(h, h) - estar(h, -h) - estar(-h, h) + estar(-h, -h)
    ) / (4.0 * h * h)
    assert abs(bundle.hessian_x[0, 1] - fd) < 1e-5


# Taylor tables


def test_taylor_pes_model():
    bundle = model_bundle(0.0)
    table = taylor_pes(bundle, (-0.5, 0.5), 11)
    assert table.shape == (11, 3)
    delta = table[:, 0]
    assert np.max(np.abs(table[:, 1] - (-1.0 - 0.5 * delta**2))) < 1e-9
    # third derivative vanishes at x = 0, so both columns coincide
    assert np.max(np.abs(table[:, 2] - table[:, 1])) < 1e-9
    center = table[5]
    assert center[0] == pytest.approx(0.0)
    assert center[1] == pytest.approx(bundle.energy)
    assert center[2] == pytest.approx(bundle.energy)


def test_taylor_pes_cubic_term():
    bundle = model_bundle(1.0)
    table = taylor_pes(bundle, (0.8, 1.2), 5)
    delta = table[:, 0] - 1.0
    t3 = bundle.third_x[0, 0, 0]
    assert np.max(np.abs((table[:, 2] - table[:, 1]) - t3 * delta**3 / 6.0)) < 1e-12


def test_taylor_pes_second_order_bundle_repeats_harmonic():
    bundle = model_bundle(0.3, order=2)
    table = taylor_pes(bundle, (0.0, 0.6), 7)
    assert np.array_equal(table[:, 1], table[:, 2])


def test_taylor_pes_validation():
    bundle = model_bundle(0.3, order=1)
    with pytest.raises(ValueError, match="second-order"):
        taylor_pes(bundle, (0.0, 1.0), 5)
    with pytest.raises(ValueError, match="samples"):
        taylor_pes(model_bundle(0.3), (0.0, 1.0), 0)


# cost model


def test_cost_estimate_formulas():
    eps = 1e-3
    first = cost_estimate(4, 10, 1, eps)
    assert first["method_runs"] == pytest.approx(4**4 / eps**2)
    assert first["backend"] == "any"

    base = cost_estimate(4, 10, 2, eps, backend="ancilla")
    doubled = cost_estimate(4, 20, 2, eps, backend="ancilla")
    assert doubled["method_runs"] == pytest.approx(4.0 * base["method_runs"])
    assert base["method_runs"] == pytest.approx(2 * 4**4 * 100 / eps**2)


@pytest.mark.parametrize("order", [2, 3])
def test_cost_estimate_lowdepth_doubles_ancilla(order):
    anc = cost_estimate(3, 8, order, 1e-2, backend="ancilla")
    low = cost_estimate(3, 8, order, 1e-2, backend="lowdepth")
    assert low["method_runs"] / anc["method_runs"] == pytest.approx(2.0)
    assert low["per_entry_runs"] == 2 * anc["per_entry_runs"]


def test_cost_estimate_fd_comparison():
    out = cost_estimate(2, 6, 2, 1e-3, fd_step=1e-3)
    assert out["fd_runs"] == pytest.approx(2**4 / (1e-6 * 1e-12))
    with pytest.raises(ValueError, match="order"):
        cost_estimate(2, 6, 4, 1e-3)
    with pytest.raises(ValueError, match="epsilon"):
        cost_estimate(2, 6, 2, 0.0)
    with pytest.raises(ValueError, match="backend"):
        cost_estimate(2, 6, 2, 1e-3, backend="exact")


# serialization


def test_bundle_round_trips_through_json():
    bundle = model_bundle(0.3)
    blob = json.dumps(bundle.to_dict())
    back = json.loads(blob)
    assert back["energy"] == pytest.approx(bundle.energy)
    assert back["grad_x"][0] == pytest.approx(bundle.grad_x[0])
    assert back["hessian_x"][0][0] == pytest.approx(bundle.hessian_x[0, 0])
    assert back["provenance"]["backend"] == "exact"
    assert back["r2"] is None
