import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quantherm.operators import embed_left, embed_right, partial_trace
from quantherm.propagators import (
    ConstitutiveOmega,
    ConstrainedPolicy,
    ConstraintError,
    ReservoirPolicy,
    ReservoirSpec,
    SeparationPolicy,
    from_traceless_coords,
    gell_mann_basis,
    inert_partner_temperature,
    lift_local,
    reservoir_full_propagator,
    reservoir_heat_capacity,
    reservoir_propagator,
    reservoir_rate,
    separation_propagator,
    solve_trace_constraints,
    split_propagator,
    traceless_coords,
)
from quantherm.sampling import random_density, random_hermitian, random_unitary
from quantherm.state import DensityOperator, canonical, log_z_rho
from quantherm.thermo import HamiltonianTriple, Temperatures, heat_exchanges

from conftest import dims_st, seeds


def traceless(a):
    d = a.shape[0]
    return a - np.trace(a) / d * np.eye(d)


def gram_solution(ops, targets):
    # minimum-norm traceless X lies in span of the traceless parts
    p = [traceless(o) for o in ops]
    g = np.array([[np.trace(a @ b).real for b in p] for a in p])
    c = np.linalg.solve(g, targets)
    return sum(ci * pi for ci, pi in zip(c, p))


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_gell_mann_orthonormal(d):
    b = gell_mann_basis(d)
    assert b.shape == (d * d - 1, d, d)
    if d == 1:
        return
    gram = np.einsum("aij,bji->ab", b, b)
    np.testing.assert_allclose(gram, np.eye(d * d - 1), atol=1e-12)
    np.testing.assert_allclose(np.trace(b, axis1=1, axis2=2), 0, atol=1e-12)
    np.testing.assert_allclose(b, b.conj().swapaxes(1, 2))


@given(d=st.integers(2, 5), seed=seeds)
def test_traceless_coords_roundtrip(d, seed):
    x = traceless(random_hermitian(d, seed))
    np.testing.assert_allclose(from_traceless_coords(traceless_coords(x), d), x, atol=1e-12)
    assert np.linalg.norm(traceless_coords(x)) == pytest.approx(np.linalg.norm(x), rel=1e-12)


@given(d=st.integers(2, 6), k=st.integers(1, 3), seed=seeds)
def test_min_norm_matches_gram_oracle(d, k, seed):
    rng = np.random.default_rng(seed)
    ops = [random_hermitian(d, rng) for _ in range(k)]
    t = rng.standard_normal(k)
    x = solve_trace_constraints(ops, t)
    np.testing.assert_allclose(x, gram_solution(ops, t), atol=1e-9)
    np.testing.assert_allclose([np.trace(o @ x).real for o in ops], t, atol=1e-10)
    assert abs(np.trace(x)) < 1e-12


@given(d=st.integers(2, 5), seed=seeds)
def test_min_norm_is_minimal(d, seed):
    rng = np.random.default_rng(seed)
    ops = [random_hermitian(d, rng)]
    x = solve_trace_constraints(ops, [0.7])
    # any null-space direction only adds norm
    y = traceless(random_hermitian(d, rng))
    y -= np.trace(traceless(ops[0]) @ y).real / np.linalg.norm(traceless(ops[0])) ** 2 * traceless(ops[0])
    assert np.linalg.norm(x + 0.1 * y) >= np.linalg.norm(x)


def test_inconsistent_constraints_raise_with_rank():
    h = np.diag([1.0, 2.0, 3.0])
    with pytest.raises(ConstraintError) as info:
        solve_trace_constraints([h, 2 * h], [1.0, 1.0])
    assert info.value.rank == 1
    assert info.value.n_constraints == 2
    # identity has no traceless component
    with pytest.raises(ConstraintError):
        solve_trace_constraints([np.eye(2)], [1.0])


def test_base_and_diagonal_modes(rng):
    d = 3
    h = random_hermitian(d, rng)
    base = traceless(random_hermitian(d, rng))
    x = solve_trace_constraints([h], [0.4], base=base)
    assert np.trace(h @ x).real == pytest.approx(0.4)
    np.testing.assert_allclose(x - base, gram_solution([h], [0.4 - np.trace(h @ base).real]), atol=1e-10)
    u = random_unitary(d, rng)
    x = solve_trace_constraints([h], [0.4], eigvecs=u)
    y = u.conj().T @ x @ u
    np.testing.assert_allclose(y - np.diag(np.diag(y)), 0, atol=1e-12)
    assert np.trace(h @ x).real == pytest.approx(0.4)


def test_omega_laws():
    om = ConstitutiveOmega(kappa=2.0)
    assert om(0.5) == 1.0 and om(-0.5) == -1.0
    ConstitutiveOmega(func=np.sinh)
    with pytest.raises(ValueError):
        ConstitutiveOmega(func=np.cosh)
    with pytest.raises(ValueError):
        ConstitutiveOmega(func=lambda x: -x)
    with pytest.raises(ValueError):
        ConstitutiveOmega(kappa=-1.0)
    with pytest.raises(ValueError):
        ConstitutiveOmega(channel="sideways")


@given(d=st.integers(2, 6), z=st.floats(0.1, 10.0), seed=seeds)
def test_separation_axiom(d, z, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(d, rng)
    rho = random_density(d, rng, floor=1e-3)
    ro = separation_propagator(h, rho, z=z).matrix
    assert abs(np.trace(h @ ro).real) <= 1e-10
    s_dot = -np.trace(ro @ log_z_rho(rho, z)).real
    k = log_z_rho(rho) @ h - h @ log_z_rho(rho)
    assert s_dot == pytest.approx(np.linalg.norm(k) ** 2, abs=1e-9)
    assert s_dot >= -1e-10
    np.testing.assert_allclose(ro, separation_propagator(h, rho, z=1.0).matrix, atol=1e-10)


def test_separation_vanishes_on_canonical():
    h = random_hermitian(3, 8)
    ro = separation_propagator(h, canonical(h, 0.7)).matrix
    assert np.abs(ro).max() < 1e-10


def test_lift_local_traces(rng):
    r1, r2 = random_density(2, rng), random_density(3, rng)
    x1, x2 = traceless(random_hermitian(2, rng)), traceless(random_hermitian(3, rng))
    lifted = lift_local(x1, x2, r1, r2)
    np.testing.assert_allclose(partial_trace(lifted, 2, (2, 3)), x1, atol=1e-12)
    np.testing.assert_allclose(partial_trace(lifted, 1, (2, 3)), x2, atol=1e-12)


@given(d=st.integers(2, 6), temp=st.floats(0.3, 4.0), seed=seeds)
def test_reservoir_rate_finite_difference(d, temp, seed):
    h2 = random_hermitian(d, seed)
    spec = ReservoirSpec(temp, 1e-3 * temp, h2)
    _, c_op = reservoir_rate(spec)
    step = 1e-5
    fd = (canonical(h2, temp + step).matrix - canonical(h2, temp - step).matrix) / (2 * step)
    np.testing.assert_allclose(c_op, fd, atol=1e-6)


@given(d=st.integers(2, 6), temp=st.floats(0.3, 4.0), seed=seeds)
def test_reservoir_heat_capacity_is_energy_variance(d, temp, seed):
    h2 = random_hermitian(d, seed)
    rho = canonical(h2, temp).matrix
    mean = np.trace(rho @ h2).real
    var = np.trace(rho @ h2 @ h2).real - mean**2
    assert reservoir_heat_capacity(ReservoirSpec(temp, 0.0, h2)) == pytest.approx(var / temp**2, rel=1e-8, abs=1e-13)


def test_reservoir_spec_warns_on_fast_drift():
    with pytest.warns(UserWarning):
        ReservoirSpec(1.0, 0.5, np.eye(2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ReservoirSpec(1.0, 1e-3, np.eye(2))


def _bipartite(rng, d1=2, d2=3, g=0.2):
    h1, h2 = random_hermitian(d1, rng), random_hermitian(d2, rng)
    h12 = g * np.kron(random_hermitian(d1, rng), random_hermitian(d2, rng))
    return HamiltonianTriple.from_local(h1, h2, h12), h2


def test_reservoir_full_propagator_constraints(rng):
    ham, h2 = _bipartite(rng)
    rho = DensityOperator(random_density(6, rng, floor=0.02), (2, 3))
    spec = ReservoirSpec(1.3, 1e-3, h2)
    ro = reservoir_full_propagator(spec, ham, rho)
    ro2 = reservoir_propagator(spec, ham.h12, rho).matrix
    np.testing.assert_allclose(partial_trace(ro.matrix, 1, rho.dims), ro2, atol=1e-10)
    assert abs(np.trace(ham.total @ ro.matrix)) < 1e-10
    q = heat_exchanges(rho, ham, ro)
    assert abs(q["Q12_int"]) < 1e-10
    np.testing.assert_allclose(ro.ex, 0)


def test_reservoir_heat_is_capacity_times_rate(rng):
    ham, h2 = _bipartite(rng)
    rho = DensityOperator.product(random_density(2, rng, floor=0.02), canonical(h2, 1.3).matrix)
    pol = ReservoirPolicy(1.3, 2e-3)
    ro = pol(0.0, rho, ham)
    _, _, c_hr = pol.reservoir_info(0.0, ham)
    assert heat_exchanges(rho, ham, ro)["Q2"] == pytest.approx(c_hr * 2e-3, abs=1e-8)


def test_split_meets_constitutive_targets(rng):
    ham, _ = _bipartite(rng)
    rho = DensityOperator(random_density(6, rng, floor=0.02), (2, 3))
    temps = Temperatures(theta1=1.2, theta2=0.8, t_box=1.0, t1=1.1, t2=0.9)
    om = ConstitutiveOmega(0.3)
    ro = split_propagator(ham, rho, temps, om, om)
    q = heat_exchanges(rho, ham, ro)
    assert q["Q1_ex"] == pytest.approx(0.3 * (1 / 1.2 - 1.0), abs=1e-10)
    assert q["Q2_ex"] == pytest.approx(0.3 * (1 / 0.8 - 1.0), abs=1e-10)
    assert abs(q["Q12_ex"]) < 1e-10
    assert q["Q1_int"] == pytest.approx(0.3 * (1 / 1.2 - 1 / 1.1), abs=1e-10)
    assert q["Q2_int"] == pytest.approx(0.3 * (1 / 0.8 - 1 / 0.9), abs=1e-10)
    assert abs(q["Q_iso"]) < 1e-10


def test_contact_consistent_split_recovers_theta(rng):
    from quantherm.thermo import subsystem_contact_temperature

    ham, _ = _bipartite(rng)
    rho = DensityOperator(random_density(6, rng, floor=0.02), (2, 3))
    temps = Temperatures(theta1=1.2, theta2=0.8, t_box=1.0)
    ro = split_propagator(ham, rho, temps, ConstitutiveOmega(0.3), ConstitutiveOmega(0.3), contact_consistent=True)
    assert subsystem_contact_temperature(rho, ham, ro.ex, 1) == pytest.approx(1.2, rel=1e-9)
    assert subsystem_contact_temperature(rho, ham, ro.ex, 2) == pytest.approx(0.8, rel=1e-9)


def test_inert_partner_temperature():
    t2 = inert_partner_temperature(1.2, 0.8, 1.1)
    om = ConstitutiveOmega(1.0)
    assert om(1 / 1.2 - 1 / 1.1) + om(1 / 0.8 - 1 / t2) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        inert_partner_temperature(1.0, 1.0, 0.1)


def test_separation_policy_lift(rng):
    ham, _ = _bipartite(rng)
    rho = DensityOperator(random_density(6, rng, floor=0.02), (2, 3))
    ro = SeparationPolicy()(0.0, rho, ham)
    for which, over in ((1, 2), (2, 1)):
        loc = separation_propagator(ham.local(which), partial_trace(rho.matrix, over, rho.dims)).matrix
        np.testing.assert_allclose(partial_trace(ro.matrix, over, rho.dims), loc, atol=1e-10)


def test_extracted_policy_on_canonical(rng):
    h1, h2 = random_hermitian(2, rng), random_hermitian(3, rng)
    ham = HamiltonianTriple.from_local(h1, h2)
    rho = DensityOperator.product(canonical(h1, 0.7).matrix, canonical(h2, 1.9).matrix)
    om = ConstitutiveOmega(0.1)
    pol = ConstrainedPolicy(lambda t: Temperatures(t_box=1.0), om, om, mode="extracted")
    temps = pol.effective_temperatures(0.0, rho, ham)
    assert temps.theta1 == pytest.approx(0.7, rel=1e-9)
    assert temps.theta2 == pytest.approx(1.9, rel=1e-9)
    with pytest.raises(ValueError):
        ConstrainedPolicy(lambda t: Temperatures(), om, om, mode="bogus").effective_temperatures(0.0, rho, ham)


def test_embed_helpers_consistent():
    a = np.diag([1.0, 2.0])
    np.testing.assert_allclose(embed_left(a, (2, 3)), np.kron(a, np.eye(3)))
    np.testing.assert_allclose(embed_right(np.eye(3), (2, 3)), np.eye(6))
