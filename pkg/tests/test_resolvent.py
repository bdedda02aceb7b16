import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from semidamp import quantize as q
from semidamp import resolvent as res
from semidamp.errors import (DissipativeBoundViolation, NoConvergence,
                             PreconditionViolated, SingularSystem)
from semidamp.linalg import spectral_norm
from semidamp.quantize import DiscreteOperator
from semidamp.scenarios import FREE


def random_dissipative(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    t_r = (a + a.conj().T) / 2
    g = rng.standard_normal((n, n))
    return t_r, g.T @ g / n


def as_op(t_r, t_i):
    return DiscreteOperator((t_r - 1j * t_i).astype(complex), "H",
                            hermitian=False, meta={"dissipative": True})


def test_solve_1x1():
    op = DiscreteOperator(np.array([[0.0 + 0j]]), "H", hermitian=True,
                          meta={"dissipative": True})
    u = res.solve(op, 1j, np.array([1.0 + 0j]))
    assert u[0] == pytest.approx(1j)  # 1/(0 - i) = i


def test_dissipative_bound_on_random_instances():
    rng = np.random.default_rng(42)
    for _ in range(25):
        n = int(rng.integers(2, 41))
        t_r, t_i = random_dissipative(rng, n)
        dense = np.linalg.inv(t_r - 1j * t_i - (0.4 + 0.6j) * np.eye(n))
        assert sla.svdvals(dense)[0] <= 1.0 / 0.6 + 1e-10
        op = as_op(t_r, t_i)
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u = res.solve(op, 0.4 + 0.6j, f)
        assert np.linalg.norm(u - dense @ f) <= 1e-9 * np.linalg.norm(dense @ f)


def test_bound_violation_raises():
    # a NON-dissipative operator falsely tagged dissipative trips the gate:
    # (0.5i - 0.4i)^-1 has norm 10 > 1/Im z = 2.5
    op = DiscreteOperator(np.array([[1j * 0.5]]), "H", hermitian=False,
                          meta={"dissipative": True})
    with pytest.raises(DissipativeBoundViolation):
        res.solve(op, 0.4j, np.array([1.0 + 0j]))


def test_singular_system_reported():
    op = DiscreteOperator(np.array([[1.0 + 0j, 0.0], [0.0, 1.0]]), "other",
                          hermitian=True)
    with pytest.raises(SingularSystem):
        res.solve(op, 1.0 + 0j, np.array([1.0, 1.0], dtype=complex))


def test_weighted_norm_eigen_oracle():
    rng = np.random.default_rng(3)
    n = 40
    h0 = rng.standard_normal((n, n))
    h0 = (h0 + h0.T) / 2
    grid = q.Grid(-5, 5, n)
    op = DiscreteOperator(h0.astype(complex), "H1", hermitian=True, grid=grid,
                          meta={"dissipative": True})
    z = 0.5 + 0.3j
    wn = res.weighted_norm(op, z, 0.0)
    lam = np.linalg.eigvalsh(h0)
    assert wn == pytest.approx(1.0 / np.min(np.abs(lam - z)), rel=1e-8)


def test_weighted_norm_1x1():
    op = DiscreteOperator(np.array([[0.0 + 0j]]), "H", hermitian=True,
                          meta={"dissipative": True})
    # weight(0) = identity: norm = 1/|E + i mu|
    val = res.weighted_norm(op, 2.0 + 0.5j, 0.0)
    assert val == pytest.approx(1.0 / abs(2.0 + 0.5j), rel=1e-10)


def test_power_iteration_matches_svd():
    op = FREE.build(1 / 8).h
    z = 1.0 + 1e-3j
    direct = res.weighted_norm(op, z, 1.0, method="svd")
    power = res.weighted_norm(op, z, 1.0, method="power", svd_limit=0)
    assert power == pytest.approx(direct, rel=1e-6)


def test_weighted_norm_monotone_in_im_z():
    op = FREE.build(1 / 8).h
    mus = [1e-3, 4e-3, 1.6e-2, 6.4e-2]
    vals = [res.weighted_norm(op, 1.0 + 1j * mu, 1.0) for mu in mus]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_weight_monotone_in_s():
    op = FREE.build(1 / 8).h
    z = 1.0 + 1e-3j
    v1 = res.weighted_norm(op, z, 1.5)
    v2 = res.weighted_norm(op, z, 1.0)
    v3 = res.weighted_norm(op, z, 0.5)
    assert v1 <= v2 <= v3


def test_quadratic_estimate_examples():
    one = np.array([[1.0 + 0j]])
    chk = res.quadratic_estimate_check(0 * one, one, one, one, 1j)
    assert chk.lhs == pytest.approx(0.5)
    assert chk.rhs == pytest.approx(np.sqrt(0.5))
    assert chk.holds
    chk0 = res.quadratic_estimate_check(0 * one, one, 0 * one, one, 1j)
    assert chk0.lhs == 0.0 and chk0.holds


def test_quadratic_estimate_preconditions():
    one = np.array([[1.0 + 0j]])
    with pytest.raises(PreconditionViolated):
        res.quadratic_estimate_check(0 * one, -one, one, one, 1j)
    with pytest.raises(PreconditionViolated):
        res.quadratic_estimate_check(0 * one, one, 2 * one, one, 1j)
    with pytest.raises(PreconditionViolated):
        res.quadratic_estimate_check(0 * one, one, one, one, -1j)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), im=st.sampled_from([0.1, 0.5, 1.0]))
def test_quadratic_estimate_random_property(seed, im):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    t_r, t_i = random_dissipative(rng, n)
    lam, u = np.linalg.eigh(t_i)
    b = (u * np.sqrt(np.clip(lam, 0, None))[None, :]) @ u.conj().T
    qm = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    qm = (qm + qm.conj().T) / 2
    chk = res.quadratic_estimate_check(t_r, t_i, b, qm,
                                       complex(rng.uniform(-1, 1), im))
    assert chk.holds


def test_first_resolvent_identity():
    op = FREE.build(1 / 8).h
    z1, z2 = 1.0 + 2e-3j, 0.95 + 5e-3j
    r1 = res.resolvent_dense(op, z1)
    r2 = res.resolvent_dense(op, z2)
    lhs = r1 - r2 - (z1 - z2) * (r1 @ r2)
    assert spectral_norm(lhs, seed_label="fri") <= 1e-8


def test_adjoint_symmetry():
    op = FREE.build(1 / 8).h
    z = 1.0 + 2e-3j
    w = q.weight_vector(op.grid, 1.0)
    solver = res.ShiftedSolver(op, z)
    m = w[:, None] * solver.solve(np.diag(w).astype(complex))
    madj = w[:, None] * np.column_stack(
        [solver.solve_adjoint(w * e) for e in np.eye(op.grid.n_points)])
    assert abs(spectral_norm(m) - spectral_norm(madj)) <= 1e-10 * spectral_norm(m)


def test_limiting_absorption_basics():
    op = FREE.build(1 / 8).h
    scan = res.limiting_absorption_scan(op, 1.0, 1.0, [4e-3, 2e-3, 1e-3, 5e-4])
    assert scan.converged
    assert all(b < a for a, b in zip(scan.increments, scan.increments[1:]))
    with pytest.raises(ValueError):
        res.limiting_absorption_scan(op, 1.0, 1.0, [1e-3, 2e-3])
    with pytest.raises(ValueError):
        res.limiting_absorption_scan(op, 1.0, 1.0, [1e-3, 5e-5])


def test_resolvent_decay_at_large_mu():
    op = FREE.build(1 / 8).h
    for mu in (10.0, 40.0):
        m = res.weighted_resolvent_matrix(op, 1.0 + 1j * mu, 1.0)
        assert spectral_norm(m) * mu == pytest.approx(1.0, abs=0.05)


def test_negative_projection_examples():
    opH = DiscreteOperator(np.array([[0.0 + 0j]]), "H", hermitian=True,
                           meta={"dissipative": True})
    all_pos = DiscreteOperator(np.array([[2.0 + 0j]]), "A_h", hermitian=True)
    assert res.negative_projection_estimate(opH, all_pos, 1j, 2.0) == 0.0
    neg = DiscreteOperator(np.array([[-1.0 + 0j]]), "A_h", hermitian=True)
    # |1/(0 - i)| * <-1>^-2 = 1/2
    assert res.negative_projection_estimate(opH, neg, 1j, 2.0) == \
        pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValueError):
        res.negative_projection_estimate(opH, neg, 1j, 0.5)


def test_negative_projection_vs_weighted_norm_across_h():
    # one-sided estimate scales no worse than the two-sided weighted norm
    ratios = []
    for h in (1 / 8, 1 / 16):
        ops = FREE.build(h, with_a=True)
        z = 1.0 + 1e-3j
        npe = res.negative_projection_estimate(ops.h, ops.a, z, 1.5)
        wn = res.weighted_norm(ops.h, z, 1.5)
        ratios.append(npe / wn)
    assert max(ratios) / min(ratios) <= 10.0


def test_nu_tilde_axis_values():
    lin = q.SemiclassicalParams(h=0.1, nu_law=q.NuLaw("linear"))
    assert 1.0 / (lin.h * lin.nu_tilde) == pytest.approx(10.0)
    quad = q.SemiclassicalParams(h=0.1, nu_law=q.NuLaw("quadratic"))
    assert 1.0 / (quad.h * quad.nu_tilde) == pytest.approx(100.0)
