"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in the terminal
summary (and inline with ``-s``).  Run with ``pytest tests/test_acceptance.py -v``.
"""

import filecmp
import math
from pathlib import Path

import numpy as np
import pytest

from quantherm.dynamics import evolve, evolve_many, evolve_traced
from quantherm.equilibrium import check_equilibrium_bipartite, check_equilibrium_undecomposed
from quantherm.operators import commutator, embed_left, partial_trace
from quantherm.propagators import (
    ConstitutiveOmega,
    ConstrainedPolicy,
    ReservoirPolicy,
    ReservoirSpec,
    SeparationPolicy,
    lift_local,
    reservoir_full_propagator,
    reservoir_heat_capacity,
    reservoir_rate,
    separation_propagator,
    split_propagator,
)
from quantherm.sampling import random_density, random_hermitian
from quantherm.scenario.runner import batch
from quantherm.state import DensityOperator, Propagator, canonical, log_z_rho, partial_entropies
from quantherm.thermo import (
    HamiltonianTriple,
    Temperatures,
    classify_partition,
    compute_ledger,
    contact_temperature,
    heat_exchanges,
    inequality_suite,
    undecomposed_contact_temperature,
)

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = str(ROOT / "scenarios" / "*.json")

TITLES = {
    1: "tracing identities",
    2: "Klein inequality / subadditivity",
    3: "conservation under free integration",
    4: "full vs traced equivalence",
    5: "separation axiom",
    6: "heat bookkeeping",
    7: "First Law on golden suite",
    8: "contact-temperature extraction",
    9: "reservoir oracle",
    10: "equilibrium",
    11: "inequality suite with linear Omega",
    12: "determinism",
}
RESULTS: dict = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {TITLES[n]}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def traceless(a):
    return a - np.trace(a) / a.shape[0] * np.eye(a.shape[0])


def random_triple(rng, d1, d2, g=0.2):
    return HamiltonianTriple.from_local(random_hermitian(d1, rng), random_hermitian(d2, rng),
                                        g * random_hermitian(d1 * d2, rng))


@pytest.fixture(scope="module")
def golden_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("golden")
    out = {}
    for label, jobs in (("serial", 1), ("parallel_a", 4), ("parallel_b", 4)):
        summary = batch(GOLDEN, jobs=jobs, out_dir=base / label)
        out[label] = (base / label, summary)
    return out


def test_criterion_01_tracing_identities():
    rng = np.random.default_rng(101)
    worst_comm = worst_tr = 0.0
    for _ in range(200):
        d1, d2 = rng.choice([2, 3, 4], size=2)
        a = random_hermitian(d1, rng)
        b = rng.standard_normal((d1 * d2,) * 2) + 1j * rng.standard_normal((d1 * d2,) * 2)
        c = rng.standard_normal((d1 * d2,) * 2) + 1j * rng.standard_normal((d1 * d2,) * 2)
        lhs = partial_trace(commutator(embed_left(a, (d1, d2)), b), 1, (d1, d2))
        worst_comm = max(worst_comm, float(np.abs(lhs).max()))
        worst_tr = max(worst_tr, abs(np.trace(partial_trace(c, 1, (d1, d2))) - np.trace(c)))
    record(1, worst_comm <= 1e-12 and worst_tr <= 1e-12,
           f"max |Tr1[A1,B]| = {worst_comm:.1e}, max |Tr2 Tr1 A - Tr A| = {worst_tr:.1e} (tol 1e-12)")


def test_criterion_02_subadditivity():
    rng = np.random.default_rng(202)
    worst = math.inf
    for _ in range(1000):
        d1, d2 = rng.choice([2, 3, 4], size=2)
        rank = int(rng.integers(1, d1 * d2 + 1))
        rho = DensityOperator(random_density(d1 * d2, rng, rank=rank), (d1, d2))
        worst = min(worst, partial_entropies(rho)[2])
    prod = 0.0
    for _ in range(100):
        d1, d2 = rng.choice([2, 3, 4], size=2)
        rho = DensityOperator.product(random_density(d1, rng), random_density(d2, rng))
        prod = max(prod, abs(partial_entropies(rho)[2]))
    record(2, worst >= -1e-10 and prod <= 1e-10,
           f"min S1+S2-S = {worst:.2e} (>= -1e-10), product max |gap| = {prod:.1e} (<= 1e-10)")


def test_criterion_03_free_conservation():
    rng = np.random.default_rng(303)
    d = 4
    h = random_hermitian(d, rng)
    states = np.stack([random_density(d, rng) for _ in range(50)])
    res = evolve_many(states, h, dt=1e-3, steps=10_000)
    ok = res.max_trace_error <= 1e-10 and res.max_spectrum_drift <= 1e-8 and res.max_entropy_rate <= 1e-10
    record(3, ok, f"50 states x 1e4 RK4 steps: trace err {res.max_trace_error:.1e}, "
                  f"spectrum drift {res.max_spectrum_drift:.1e}, |S_dot| {res.max_entropy_rate:.1e}")


def test_criterion_04_full_vs_traced():
    rng = np.random.default_rng(404)
    om = ConstitutiveOmega(0.02)
    temps = Temperatures(theta1=1.2, theta2=0.9, t_box=1.0, t1=1.1, t2=0.95)
    cases = [((2, 2), "constrained"), ((2, 3), "constrained"), ((3, 2), "constrained"), ((3, 3), "constrained"),
             ((2, 4), "constrained"), ((2, 2), "separation"), ((3, 2), "separation"), ((2, 3), "separation"),
             ((2, 2), "reservoir"), ((3, 2), "reservoir")]
    worst = 0.0
    for (d1, d2), kind in cases:
        ham = random_triple(rng, d1, d2, g=0.3)
        if kind == "reservoir":
            pol = ReservoirPolicy(1.0, 1e-3)
            rho = DensityOperator.product(random_density(d1, rng, floor=0.05), canonical(ham.local(2), 1.0).matrix)
        else:
            pol = ConstrainedPolicy(lambda t: temps, om, om) if kind == "constrained" else SeparationPolicy()
            rho = DensityOperator(random_density(d1 * d2, rng, floor=0.5 / (d1 * d2)), (d1, d2))
        fin = evolve(rho, ham, pol, t_span=(0.0, 0.5), dt=0.01, record_ledger=False).final
        r1, r2 = evolve_traced(rho, ham, pol, t_span=(0.0, 0.5), dt=0.01)
        assert np.linalg.norm(pol(0.0, rho, ham).matrix) > 1e-6
        worst = max(worst, np.linalg.norm(partial_trace(fin.matrix, 2, fin.dims) - r1),
                    np.linalg.norm(partial_trace(fin.matrix, 1, fin.dims) - r2))
    record(4, worst <= 1e-8, f"10 scenarios with H12 != 0 and ro != 0: max Frobenius gap {worst:.1e} (tol 1e-8)")


def test_criterion_05_separation_axiom():
    rng = np.random.default_rng(505)
    q_worst = z_worst = 0.0
    s_min = math.inf
    for _ in range(200):
        d = int(rng.integers(2, 9))
        h = random_hermitian(d, rng)
        rho = random_density(d, rng)
        ro = separation_propagator(h, rho).matrix
        q_worst = max(q_worst, abs(np.trace(h @ ro).real))
        s_min = min(s_min, -np.trace(ro @ log_z_rho(rho)).real)
        for z in (0.1, 10.0):
            ro_z = separation_propagator(h, rho, z=z).matrix
            s_z = -np.trace(ro_z @ log_z_rho(rho, z)).real
            z_worst = max(z_worst, float(np.abs(ro_z - ro).max()),
                          abs(s_z + np.trace(ro @ log_z_rho(rho)).real))
    record(5, q_worst <= 1e-10 and s_min >= -1e-10 and z_worst <= 1e-10,
           f"max |Q_sep| = {q_worst:.1e}, min S_sep = {s_min:.2e}, Z-sweep gap {z_worst:.1e}")


def test_criterion_06_heat_bookkeeping():
    rng = np.random.default_rng(606)
    worst = {"sum": 0.0, "ex": 0.0, "int": 0.0}
    for _ in range(100):
        d1, d2 = (int(x) for x in rng.integers(2, 5, size=2))
        ham = random_triple(rng, d1, d2, g=float(rng.uniform(0.05, 0.5)))
        rho = DensityOperator(random_density(d1 * d2, rng), (d1, d2))
        temps = Temperatures(*rng.uniform(0.3, 3.0, size=6))
        om_ex, om_int = ConstitutiveOmega(float(rng.uniform(0.01, 1))), ConstitutiveOmega(float(rng.uniform(0.01, 1)))
        ro = split_propagator(ham, rho, temps, om_ex, om_int)
        q = heat_exchanges(rho, ham, ro)
        h = ham.total
        worst["sum"] = max(worst["sum"], abs(q["Q1"] + q["Q2"] + q["Q12"] - np.trace(h @ ro.matrix).real))
        worst["ex"] = max(worst["ex"], abs(q["Q1_ex"] + q["Q2_ex"] - np.trace(h @ ro.ex).real))
        worst["int"] = max(worst["int"], abs(q["Q1_int"] + q["Q2_int"] + q["Q12_int"]))
    record(6, max(worst.values()) <= 1e-10,
           f"100 constrained cases: heat sum {worst['sum']:.1e}, ex additivity {worst['ex']:.1e}, "
           f"internal sum {worst['int']:.1e} (tol 1e-10)")


def test_criterion_07_first_law(golden_runs):
    out, summary = golden_runs["serial"]
    worst = 0.0
    n_rows = 0
    for csv_path in sorted(out.glob("*.csv")):
        data = np.genfromtxt(csv_path, delimiter=",", names=True)
        rel = np.abs(data["res_first_law"]) / data["first_law_scale"]
        worst = max(worst, float(rel.max()))
        n_rows += rel.size
    ok = summary["n_ok"] == len(summary["scenarios"]) and n_rows > 0 and worst <= 1e-9
    record(7, ok, f"{len(summary['scenarios'])} golden scenarios, {n_rows} rows: max relative residual {worst:.1e} "
                  f"(tol 1e-9)")


def test_criterion_08_contact_temperature():
    rng = np.random.default_rng(808)
    worst = z_worst = 0.0
    for theta0 in (0.5, 1.0, 2.0):
        d = int(rng.integers(2, 7))
        h = random_hermitian(d, rng)
        rho = canonical(h, theta0)
        found = 0
        while found < 20:
            ex = traceless(random_hermitian(d, rng))
            if abs(np.trace(h @ ex).real) < 0.1 * np.linalg.norm(ex):
                continue
            found += 1
            th = contact_temperature(rho, h, ex)
            worst = max(worst, abs(th - theta0))
            for z in (0.1, 10.0):
                z_worst = max(z_worst, abs(contact_temperature(rho, h, ex, z=z) - th))
    record(8, worst <= 1e-9 and z_worst <= 1e-10,
           f"60 extractions: max |Theta - theta0| = {worst:.1e} (tol 1e-9), Z gap {z_worst:.1e} (tol 1e-10)")


def test_criterion_09_reservoir_oracle():
    rng = np.random.default_rng(909)
    fd_worst = q_worst = 0.0
    c_min = math.inf
    step = 1e-5
    for _ in range(50):
        d2 = int(rng.integers(2, 7))
        h2 = random_hermitian(d2, rng)
        temp = float(rng.uniform(0.3, 3.0))
        tdot = 1e-3 * temp * float(rng.uniform(-1, 1))
        spec = ReservoirSpec(temp, tdot, h2)
        _, c_op = reservoir_rate(spec)
        fd = (canonical(h2, temp + step).matrix - canonical(h2, temp - step).matrix) / (2 * step)
        fd_worst = max(fd_worst, float(np.abs(c_op - fd).max()))
        c_hr = reservoir_heat_capacity(spec)
        c_min = min(c_min, c_hr)
        ham = HamiltonianTriple.from_local(random_hermitian(2, rng), h2,
                                           0.1 * np.kron(random_hermitian(2, rng), random_hermitian(d2, rng)))
        rho = DensityOperator.product(random_density(2, rng, floor=0.05), canonical(h2, temp).matrix)
        ro = reservoir_full_propagator(spec, ham, rho)
        q_worst = max(q_worst, abs(heat_exchanges(rho, ham, ro)["Q2"] - c_hr * tdot))
    record(9, fd_worst <= 1e-6 and q_worst <= 1e-8 and c_min >= -1e-12,
           f"50 reservoirs: C_op vs FD {fd_worst:.1e} (tol 1e-6), |Q2_HR - C_HR Tdot| {q_worst:.1e} (tol 1e-8), "
           f"min C_HR {c_min:.2e}")


def test_criterion_10_equilibrium():
    rng = np.random.default_rng(1010)
    moved = 0.0
    all_sufficient = True
    for _ in range(5):
        d = int(rng.integers(2, 7))
        h = random_hermitian(d, rng)
        theta = float(rng.uniform(0.3, 3.0))
        rho = canonical(h, theta)
        rep = check_equilibrium_undecomposed(rho, h, Propagator.zero(d), 0.0, theta, theta)
        all_sufficient &= rep.sufficient_ok
        fin = evolve(rho, h, t_span=(0.0, 1.0), dt=0.01, record_ledger=False).final
        moved = max(moved, np.linalg.norm(fin.matrix - rho.matrix))
    # bipartite: canonical product with H12 diagonal in the product eigenbasis
    h1, h2 = random_hermitian(2, rng), random_hermitian(3, rng)
    u = np.kron(np.linalg.eigh(h1)[1], np.linalg.eigh(h2)[1])
    ham = HamiltonianTriple.from_local(h1, h2, 0.2 * u @ np.diag(rng.standard_normal(6)) @ u.conj().T)
    rho = DensityOperator.product(canonical(h1, 1.3).matrix, canonical(h2, 1.3).matrix)
    temps = Temperatures(theta1=1.3, theta2=1.3, t_box=1.3, t1=1.3, t2=1.3)
    all_sufficient &= check_equilibrium_bipartite(rho, ham, Propagator.zero(6), temps).sufficient_ok
    fin = evolve(rho, ham, t_span=(0.0, 1.0), dt=0.01, record_ledger=False).final
    moved = max(moved, np.linalg.norm(fin.matrix - rho.matrix))
    # vanishing entropy production without equilibrium
    h12 = 0.3 * np.kron(random_hermitian(2, rng), random_hermitian(2, rng))
    g1, g2 = random_hermitian(2, rng), random_hermitian(2, rng)
    ham = HamiltonianTriple.from_local(g1, g2, h12)
    r1, r2 = canonical(g1, 1.0).matrix, canonical(g2, 1.0).matrix
    rho = DensityOperator.product(r1, r2)
    comm = commutator(h12, rho.matrix)
    ro = Propagator(lift_local(1j * partial_trace(comm, 2, rho.dims), 1j * partial_trace(comm, 1, rho.dims), r1, r2))
    rep = check_equilibrium_bipartite(rho, ham, ro, Temperatures(theta1=1.0, theta2=1.0))
    sigma_zero = rep.necessary["Sigma1"] and rep.necessary["Sigma2"]
    detected = sigma_zero and not rep.sufficient_ok
    record(10, bool(all_sufficient) and moved <= 1e-9 and detected,
           f"canonical states sufficient_ok={bool(all_sufficient)}, max move over 100 steps {moved:.1e} (tol 1e-9), "
           f"Sigma=0 non-equilibrium detected={detected}")


def test_criterion_11_inequalities():
    rng = np.random.default_rng(1111)
    ham = random_triple(rng, 2, 3, g=0.2)
    rho = DensityOperator(random_density(6, rng, floor=0.02), (2, 3))
    om = ConstitutiveOmega(0.4)
    th1, th2 = 0.8, 1.6
    theta = undecomposed_contact_temperature(th1, th2, om)
    names = ("defining_undecomposed", "defining_external_1", "defining_external_2",
             "defining_internal_1", "defining_internal_2")
    worst = math.inf
    flips = True
    for t_box in np.linspace(0.5 * theta, 1.5 * theta, 21):
        t_rep = float(t_box)
        temps = Temperatures(theta=theta, theta1=th1, theta2=th2, t_box=t_box, t1=t_rep, t2=1.7 * t_rep)
        ro = split_propagator(ham, rho, temps, om, om)
        row = compute_ledger(0.0, rho, ham, ro, temps)
        res = {r.name: r for r in inequality_suite(row, temps)}
        worst = min(worst, min(res[n].margin for n in names))
        for q, th in ((row.Q_ex, theta), (row.Q1_ex, th1), (row.Q2_ex, th2)):
            if abs(t_box - th) > 1e-12:
                flips &= np.sign(q) == np.sign(t_box - th)
    # heat vanishes exactly at T_box = Theta
    temps = Temperatures(theta=theta, theta1=th1, theta2=th2, t_box=theta)
    q_at = heat_exchanges(rho, ham, split_propagator(ham, rho, temps, om, om))["Q_ex"]
    flips &= abs(q_at) <= 1e-12
    # inert mono-sheet partition with Theta12 = T12
    t12 = 1.1
    temps = Temperatures(theta=t12, theta1=t12, theta2=t12, t_box=1.0, t1=t12, t2=t12, t12=t12, theta12=t12)
    q = heat_exchanges(rho, ham, split_propagator(ham, rho, temps, om, om))
    internal = max(abs(q["Q1_int"]), abs(q["Q2_int"]))
    kind = classify_partition(q, temps, 1e-10)
    ok = worst >= -1e-12 and bool(flips) and internal <= 1e-10 and kind == ("inert", "mono_sheet")
    record(11, ok, f"21-point sweep min margin {worst:.1e} (>= -1e-12), sign flip at T_box = Theta {bool(flips)}, "
                   f"inert mono-sheet internal heats {internal:.1e} (tol 1e-10)")


def test_criterion_12_determinism(golden_runs):
    base = {k: v[0] for k, v in golden_runs.items()}
    files = sorted(p.name for p in base["serial"].glob("*.csv"))
    reports = sorted(p.name for p in base["serial"].glob("*.report.json"))
    mismatches = []
    for other in ("parallel_a", "parallel_b"):
        _, bad, errs = filecmp.cmpfiles(base["serial"], base[other], files + reports, shallow=False)
        mismatches += [f"{other}/{n}" for n in bad + errs]
    record(12, bool(files) and not mismatches,
           f"{len(files)} CSVs and {len(reports)} reports identical across jobs=1 and two jobs=4 runs"
           if not mismatches else f"differences: {mismatches}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
