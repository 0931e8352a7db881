import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scottshift.channels import AngularChannel, OperatorKind, critical_coupling_b
from scottshift.discretize import (assemble, build_grid, channel_kernel, decomposition_residual,
                                   default_grid, dump_matrix, load_matrix, q_matrix)
from scottshift.errors import DomainError, SupercriticalError
from scottshift.spectra import eigenvalues
from scottshift.special import legendre_q_cosh


@pytest.mark.parametrize("scheme", ["log-uniform", "log-gauss"])
def test_grid_integrates_powers(scheme):
    g = build_grid(1e-3, 1e2, 400, scheme)
    assert np.all(np.diff(g.nodes) > 0)
    assert g.nodes[0] >= 1e-3 and g.nodes[-1] <= 1e2 * (1 + 1e-12)
    # int p^{-1/2} dp over the range
    exact = 2 * (np.sqrt(1e2) - np.sqrt(1e-3))
    tol = 1e-10 if scheme == "log-gauss" else 2e-2
    assert np.sum(g.weights / np.sqrt(g.nodes)) == pytest.approx(exact, rel=tol)
    assert g.descriptor == {"p_min": 1e-3, "p_max": 1e2, "N": 400, "scheme": scheme}


def test_grid_validation():
    for args in ((0.0, 1.0, 100), (2.0, 1.0, 100), (1.0, np.inf, 100), (1e-3, 1.0, 8)):
        with pytest.raises(DomainError):
            build_grid(*args)
    with pytest.raises(DomainError):
        build_grid(1e-3, 1.0, 100, "trapezoid")
    assert build_grid(1e-3, 1.0, 3, "log-uniform").n == 3


def test_kernel_symmetric_and_singular_diagonal_rejected():
    ch = AngularChannel(3, 1)
    p, q = np.array([0.1, 2.0, 7.0]), np.array([0.3, 0.5, 70.0])
    for kind in ("br", "c", "s", "b0", "c0"):
        assert np.allclose(channel_kernel(kind, ch, p, q), channel_kernel(kind, ch, q, p),
                           rtol=1e-15)
    with pytest.raises(DomainError):
        channel_kernel("c", ch, 1.0, 1.0)
    with pytest.raises(DomainError):
        channel_kernel("c", ch, 0.0, 1.0)


def test_decomposition_identity():
    rng = np.random.default_rng(7)
    pairs = np.exp(rng.uniform(-9, 9, size=(10 ** 4, 2)))
    assert decomposition_residual(sample_pairs=pairs) < 1e-12


@pytest.mark.parametrize("scheme", ["log-uniform", "log-gauss"])
def test_q_matrix_offdiagonal_entries(scheme):
    g = build_grid(1e-2, 1e2, 64, scheme)
    qm = q_matrix(g, 2)
    i, j = 3, 40
    s = abs(g.log_nodes[i] - g.log_nodes[j])
    assert qm[i, j] == pytest.approx(legendre_q_cosh(2, s), rel=1e-14)
    assert np.allclose(qm, qm.T)


@pytest.mark.parametrize("l", [0, 1, 3])
@pytest.mark.parametrize("kappa", [0.3, 1.0])
def test_schroedinger_calibration(l, kappa):
    ch = AngularChannel(2 * l + 1, l)
    g = build_grid(1e-4, 1e3, 1200, "log-gauss")
    ev = eigenvalues(assemble("s", ch, kappa, g), 6)
    bohr = np.array([-kappa ** 2 / (2 * (n + l) ** 2) for n in range(1, 7)])
    assert np.max(np.abs(ev / bohr - 1)) < 1e-3


def test_convergence_order_log_uniform():
    # ground-state error drops by more than 4x per doubling (near O(h^3));
    # the range is wide enough that truncation stays below the quadrature error
    ch = AngularChannel(1, 0)
    errs = []
    for n in (200, 400, 800):
        g = build_grid(1e-5, 1e5, n, "log-uniform")
        errs.append(abs(eigenvalues(assemble("s", ch, 1.0, g), 1)[0] + 0.5))
    assert errs[1] < errs[0] / 4 and errs[2] < errs[1] / 4


def test_assemble_gate_and_readonly():
    ch = AngularChannel(1, 0)
    g = build_grid(1e-3, 1e3, 64, "log-uniform")
    kb = critical_coupling_b(1)
    m = assemble("br", ch, kb, g)
    assert not m.entries.flags.writeable
    assert np.allclose(m.entries, m.entries.T)
    with pytest.raises(SupercriticalError) as info:
        assemble("br", ch, kb * (1 + 1e-9), g)
    assert info.value.critical == pytest.approx(kb)
    with pytest.raises(SupercriticalError):
        assemble("c", ch, 0.64, g)
    assemble("s", ch, 50.0, g)
    assemble("c", ch, 0.64, g, allow_supercritical=True)
    with pytest.raises(DomainError):
        assemble("c", ch, -0.1, g)


def test_default_grid_bounds():
    g = default_grid(0.5, AngularChannel(3, 2), n_levels=6, n=200)
    assert g.p_min == pytest.approx(0.5 / (20 * 64))
    assert g.p_max == pytest.approx(150.0)


def test_dump_roundtrip(tmp_path):
    g = build_grid(1e-2, 1e2, 40, "log-gauss")
    m = assemble(OperatorKind.BROWN_RAVENHALL, AngularChannel(3, 2), 0.7, g)
    path = tmp_path / "m.bin"
    dump_matrix(m, path)
    raw = path.read_bytes()
    assert raw[:4] == b"SCSH" and len(raw) == 32 + 8 * 40 * 40
    head, arr = load_matrix(path)
    assert head["N"] == 40 and head["two_j"] == 3 and head["l"] == 2
    assert head["kind"] is OperatorKind.BROWN_RAVENHALL and head["kappa"] == 0.7
    assert np.array_equal(arr, m.entries)
    path.write_bytes(raw[:100])
    with pytest.raises(DomainError):
        load_matrix(path)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.9), st.sampled_from([(1, 0), (1, 1), (3, 1), (5, 3)]))
def test_brown_ravenhall_levels_below_schroedinger(kappa, jl):
    # same-grid comparison: the relativistic levels lie lower
    ch = AngularChannel(*jl)
    g = build_grid(kappa / 400, 50.0, 200, "log-uniform")
    s = eigenvalues(assemble("s", ch, kappa, g), 2)
    b = eigenvalues(assemble("br", ch, kappa, g), 2)
    assert np.all(b <= s + 1e-12)
