import numpy as np
import pytest

from semidamp import dilation as dil
from semidamp import quantize as q
from semidamp.errors import FrontReachedBoundary, TruncationError
from semidamp.linalg import hermiticity_defect
from semidamp.potentials import make_potential


@pytest.fixture(scope="module")
def scalar_sys():
    return dil.DilationSystem(h1_matrix=np.array([[0.5]]), v2=np.array([0.5]),
                              h=1.0, channel_length=2.0, n_channel=4000)


@pytest.fixture(scope="module")
def interior_64():
    pot = make_potential("double_barrier(2.0, 2.0, 0.4)",
                         "well_centered(1.0, 1.0)")
    grid = q.Grid(-6.0, 6.0, 64)
    params = q.SemiclassicalParams(h=0.25)
    h1, _ = q.build_hamiltonian(grid, pot, params, sponge=None, e_max=None)
    return pot, params, h1


def test_w_coupling_values(interior_64):
    pot, params, h1 = interior_64
    sys = dil.from_quantized(h1, pot, params, channel_length=2.0,
                             n_channel=100)
    v2 = pot.v2(h1.grid.nodes)
    assert np.allclose(sys.w_omega, np.sqrt(2.0 * 0.25 * v2[sys.omega]))
    assert np.all(sys.w_omega >= 0.0)
    assert sys.r_minus[-1] == 0.0 and sys.r_plus[0] == 0.0


def test_scalar_resolvent_closed_form(scalar_sys):
    z = 1.0 + 0.5j
    st = dil.zero_state(scalar_sys, phi_0=np.array([1.0 + 0j]))
    out, diag = dil.dilation_resolvent(scalar_sys, z, st)
    expected = 1.0 / (0.5 - 1j * 0.5 - z)
    assert abs(out.phi_0[0] - expected) <= 1e-10
    assert diag.jump_residual <= 1e-12
    # outgoing channel boundary trace: psi_+(0) = i W psi_0
    assert abs(out.phi_plus[0, 0] - 1j * scalar_sys.w_omega[0] * out.phi_0[0]) \
        <= 1e-12


def test_no_damping_decouples():
    sys0 = dil.DilationSystem(h1_matrix=np.array([[0.7]]),
                              v2=np.array([0.0]), h=0.5,
                              channel_length=1.0, n_channel=50)
    assert len(sys0.omega) == 0
    st = dil.zero_state(sys0, phi_0=np.array([1.0 + 0j]))
    out, _ = dil.dilation_resolvent(sys0, 0.2 + 0.3j, st)
    assert abs(out.phi_0[0] - 1.0 / (0.7 - (0.2 + 0.3j))) <= 1e-12
    assert np.all(out.phi_plus == 0.0)


def test_resolvent_identity_64(interior_64):
    pot, params, h1 = interior_64
    errs = []
    for m in (500, 1000, 2000):
        sys = dil.from_quantized(h1, pot, params, channel_length=2.0,
                                 n_channel=m)
        rep = dil.verify_resolvent_identity(sys, [1.0 + 0.5j], n_probes=10,
                                            seed=3)
        errs.append(rep.max_error)
        assert max(rep.jump_residuals) <= 1e-10
    assert errs[-1] <= 1e-6
    assert errs[0] > errs[1] > errs[2]  # monotone under channel refinement


def test_truncation_envelope(interior_64):
    # a minus-channel Gaussian with mass beyond -L: truncated boundary value
    # approaches the extended one at least as fast as exp(-Im z L)
    z = 1.0 + 0.8j
    fiber = np.array([1.0 + 0j])
    errors, envelopes = [], []
    profile = dil._gaussian_profile(-1.0, 0.8)
    ref = dil.truncated_boundary_value(z, profile, fiber, 12.0, 24000)
    for length in (2.0, 3.0, 4.0):
        val = dil.truncated_boundary_value(z, profile, fiber, length,
                                           int(2000 * length))
        errors.append(np.linalg.norm(val - ref))
        envelopes.append(np.exp(-z.imag * length))
    assert errors[0] > errors[1] > errors[2]
    for err, env in zip(errors, envelopes):
        assert err <= env


def test_truncation_error_raised(scalar_sys):
    st = dil.zero_state(scalar_sys, phi_0=np.array([1.0 + 0j]))
    with pytest.raises(TruncationError):
        dil.dilation_resolvent(scalar_sys, 1.0 + 1e-3j, st, trunc_tol=1e-6)


def test_central_generator_hermitian(interior_64):
    pot, params, h1 = interior_64
    sys = dil.from_quantized(h1, pot, params, channel_length=2.0,
                             n_channel=40)
    k = dil.build_discrete_generator(sys, "central")
    assert hermiticity_defect(k) <= 1e-10


def test_central_norm_conservation_and_interior_contraction(scalar_sys):
    sys = dil.DilationSystem(h1_matrix=np.array([[0.5]]), v2=np.array([0.5]),
                             h=1.0, channel_length=2.0, n_channel=600)
    rep = dil.verify_semigroup_dilation(sys, [0.3, 0.6, 0.9],
                                        transport="central",
                                        psi0=np.array([1.0 + 0j]))
    assert rep.norm_drift <= 1e-8
    assert rep.max_error <= 1e-3


def test_semigroup_scalar_upwind(scalar_sys):
    sys = dil.DilationSystem(h1_matrix=np.array([[1.0]]), v2=np.array([0.5]),
                             h=1.0, channel_length=2.0, n_channel=1200)
    rep = dil.verify_semigroup_dilation(sys, [0.25, 0.5, 1.0],
                                        transport="upwind",
                                        psi0=np.array([1.0 + 0j]))
    assert rep.max_error <= 1e-6
    # the reference itself matches the closed form e^{-it(l0 - i h v)/h}
    from semidamp.egorov import PropagatorPlan, propagate
    out = propagate(sys.h_op, PropagatorPlan(h=1.0, t_final=1.0),
                    np.array([1.0 + 0j]), t=1.0)
    assert abs(out[0] - np.exp(-1j * (1.0 - 0.5j))) <= 1e-12


def test_interior_norm_nonincreasing(scalar_sys):
    sys = dil.DilationSystem(h1_matrix=np.array([[1.0]]), v2=np.array([0.8]),
                             h=1.0, channel_length=2.0, n_channel=800)
    kmat = dil.build_discrete_generator(sys, "central")
    kd = kmat.toarray()
    lam, u = np.linalg.eigh(kd)
    dim = kd.shape[0]
    phi = np.zeros(dim, dtype=complex)
    phi[-1] = 1.0
    coef = u.conj().T @ phi
    norms = []
    for t in np.linspace(0.0, 1.2, 7):
        full = u @ (np.exp(-1j * t * lam) * coef)
        norms.append(np.linalg.norm(full[-1:]))
    assert all(b <= a + 1e-6 for a, b in zip(norms, norms[1:]))


def test_front_guard(scalar_sys):
    with pytest.raises(FrontReachedBoundary):
        dil.verify_semigroup_dilation(scalar_sys, [3.0], transport="upwind",
                                      psi0=np.array([1.0 + 0j]))


def test_semigroup_t0_identity(scalar_sys):
    rep = dil.verify_semigroup_dilation(
        dil.DilationSystem(h1_matrix=np.array([[1.0]]), v2=np.array([0.5]),
                           h=1.0, channel_length=2.0, n_channel=400),
        [0.0, 0.4], transport="upwind", psi0=np.array([1.0 + 0j]))
    assert rep.errors[0] <= 1e-12


def test_semigroup_no_damping_unitary():
    sys0 = dil.DilationSystem(h1_matrix=np.array([[1.0]]),
                              v2=np.array([0.0]), h=1.0,
                              channel_length=2.0, n_channel=400)
    rep = dil.verify_semigroup_dilation(sys0, [0.5, 1.0], transport="upwind",
                                        psi0=np.array([1.0 + 0j]))
    assert rep.max_error <= 1e-8


def test_adjoint_resolvent_identity(interior_64):
    pot, params, h1 = interior_64
    sys = dil.from_quantized(h1, pot, params, channel_length=2.0,
                             n_channel=800)
    zbar = np.conj(1.0 + 0.5j)
    st = dil.zero_state(sys)
    rng = np.random.default_rng(4)
    st.phi_0 = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    out, _ = dil.dilation_resolvent_adjoint(sys, zbar, st)
    from semidamp.resolvent import ShiftedSolver
    ref = ShiftedSolver(sys.h_op, np.conj(zbar)).solve_adjoint(st.phi_0)
    assert np.linalg.norm(out.phi_0 - ref) <= 1e-10 * np.linalg.norm(ref)
