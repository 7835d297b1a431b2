import math

import numpy as np
import pytest

import flaglab as fl
from flaglab.errors import ConditioningError, InputError
from flaglab.prodsvd import ProductSVD, jacobi_svd
from flaglab.subspaces import Subspace

from conftest import random_sl, random_subspace, random_unitary


# --- gap profiles -----------------------------------------------------------


def test_gaps_identity():
    gp = fl.singular_gaps(np.eye(4))
    assert np.allclose(gp.gaps, 0.0)


def test_gaps_diagonal():
    gp = fl.singular_gaps(np.diag([4.0, 2.0, 1.0]))
    assert np.allclose(gp.gaps, 0.5 * math.log(2.0), atol=1e-12)


def test_gaps_scale_invariant():
    rng = np.random.default_rng(1)
    m = random_sl(rng, 4)
    g1 = fl.singular_gaps(m).gaps
    g2 = fl.singular_gaps(7.0 * m).gaps
    assert np.allclose(g1, g2, atol=1e-12)


def test_gaps_adjoint_and_reversal():
    rng = np.random.default_rng(2)
    for _ in range(20):
        m = random_sl(rng, 5)
        g = fl.singular_gaps(m).gaps
        assert np.allclose(g, fl.singular_gaps(m.conj().T).gaps, atol=1e-10)
        # inverse-transpose (and the adjugate, its scalar multiple) reverse gaps
        rev = fl.singular_gaps(np.linalg.inv(m).T).gaps
        assert np.allclose(g, rev[::-1], atol=1e-10)


def test_gaps_conditioning_error():
    m = np.diag([1.0, 1e-20])
    with pytest.raises(ConditioningError):
        fl.singular_gaps(m)


# --- intersections and sums ---------------------------------------------------


def test_intersect_examples():
    a = Subspace.coordinate(3, [0, 1])
    b = Subspace.coordinate(3, [1, 2])
    meet = fl.intersect(a, b)
    assert meet.dim == 1
    assert fl.fubini_study(meet, Subspace.coordinate(3, [1])) < 1e-10
    assert fl.intersect(Subspace.coordinate(3, [0]), Subspace.coordinate(3, [1])).dim == 0


def _nullspace_intersection(a: Subspace, b: Subspace) -> Subspace:
    """Independent oracle: stack the orthogonal-complement constraints and
    solve for the common nullspace."""
    rows = np.concatenate(
        [a.orthocomplement().frame.conj().T, b.orthocomplement().frame.conj().T], axis=0
    )
    _, s, vh = np.linalg.svd(rows)
    null_count = int(np.sum(np.concatenate([s, np.zeros(rows.shape[1] - len(s))]) < 1e-8))
    if null_count == 0:
        return Subspace.zero(a.ambient_dim)
    return Subspace(vh[len(vh) - null_count :].conj().T)


def test_intersect_against_nullspace_oracle():
    rng = np.random.default_rng(3)
    for _ in range(40):
        a = random_subspace(rng, 5, 3)
        b = random_subspace(rng, 5, 3)
        ours = fl.intersect(a, b)
        oracle = _nullspace_intersection(a, b)
        assert ours.dim == oracle.dim == 1
        assert fl.hausdorff_subspace_dist(ours, oracle) < 1e-8


def test_sum_examples():
    e1 = Subspace.coordinate(3, [0])
    e2 = Subspace.coordinate(3, [1])
    s = fl.subspace_sum(e1, e2)
    assert s.dim == 2
    assert fl.hausdorff_subspace_dist(s, Subspace.coordinate(3, [0, 1])) < 1e-10
    z = Subspace.zero(3)
    assert fl.hausdorff_subspace_dist(fl.subspace_sum(e1, z), e1) < 1e-12


@pytest.mark.parametrize("d", range(3, 9))
def test_rank_formula(d):
    rng = np.random.default_rng(d)
    for _ in range(1000):
        ka = int(rng.integers(1, d))
        kb = int(rng.integers(1, d))
        a = random_subspace(rng, d, ka)
        b = random_subspace(rng, d, kb)
        meet = fl.intersect(a, b)
        total = fl.subspace_sum(a, b)
        assert total.dim == a.dim + b.dim - meet.dim


# --- transversality -----------------------------------------------------------


def test_transversality_examples():
    e1 = Subspace.coordinate(3, [0])
    e2 = Subspace.coordinate(3, [1])
    assert fl.transversality_gap(e1, e2) == pytest.approx(1.0, abs=1e-12)
    assert fl.transversality_gap(e1, e1) == pytest.approx(0.0, abs=1e-7)
    theta = 0.3
    v = Subspace.line(np.array([math.cos(theta), math.sin(theta), 0.0]))
    assert fl.transversality_gap(e1, v) == pytest.approx(math.sin(theta), abs=1e-12)


def test_transversality_dim_error():
    a = Subspace.coordinate(3, [0, 1])
    b = Subspace.coordinate(3, [1, 2])
    with pytest.raises(InputError):
        fl.transversality_gap(a, b)


def test_transversality_zero_iff_intersecting():
    rng = np.random.default_rng(5)
    for _ in range(30):
        a = random_subspace(rng, 6, 2)
        b = random_subspace(rng, 6, 3)
        gap = fl.transversality_gap(a, b)
        assert gap > 1e-3  # generic position
    shared = random_subspace(rng, 6, 1)
    ext = fl.subspace_sum(shared, random_subspace(rng, 6, 1))
    assert fl.transversality_gap(shared, ext) < 1e-10


# --- metrics -------------------------------------------------------------------


def test_fubini_study_examples():
    e1 = Subspace.coordinate(3, [0])
    e2 = Subspace.coordinate(3, [1])
    mid = Subspace.line(np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0))
    assert fl.fubini_study(e1, e1) == pytest.approx(0.0, abs=1e-12)
    assert fl.fubini_study(e1, e2) == pytest.approx(math.pi / 2, abs=1e-12)
    assert fl.fubini_study(e1, mid) == pytest.approx(math.pi / 4, abs=1e-12)


def test_fubini_study_metric_axioms():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        p = random_subspace(rng, 4, 1)
        q = random_subspace(rng, 4, 1)
        r = random_subspace(rng, 4, 1)
        dpq = fl.fubini_study(p, q)
        assert dpq == pytest.approx(fl.fubini_study(q, p), abs=1e-12)
        assert 0.0 <= dpq <= math.pi / 2 + 1e-12
        assert fl.fubini_study(p, r) <= dpq + fl.fubini_study(q, r) + 1e-10


def test_hausdorff_examples():
    a = Subspace.coordinate(3, [0, 1])
    b = Subspace.coordinate(3, [0, 2])
    assert fl.hausdorff_subspace_dist(a, a) == pytest.approx(0.0, abs=1e-12)
    assert fl.hausdorff_subspace_dist(a, b) == pytest.approx(math.pi / 2, abs=1e-12)
    with pytest.raises(InputError):
        fl.hausdorff_subspace_dist(a, Subspace.coordinate(3, [0]))


def test_hausdorff_two_sided_identity():
    # for hyperplanes x, y with z the orthocomplement of their intersection,
    # the Grassmannian distance equals the line distance inside z
    rng = np.random.default_rng(7)
    for _ in range(100):
        x = random_subspace(rng, 4, 3)
        y = random_subspace(rng, 4, 3)
        meet = fl.intersect(x, y)
        assert meet.dim == 2
        z = meet.orthocomplement()
        lhs = fl.hausdorff_subspace_dist(x, y)
        rhs = fl.fubini_study(fl.intersect(x, z), fl.intersect(y, z))
        assert lhs == pytest.approx(rhs, abs=1e-8)


def test_unitary_invariance_of_everything():
    rng = np.random.default_rng(8)
    d = 5
    for _ in range(20):
        u = random_unitary(rng, d)
        a = random_subspace(rng, d, 2)
        b = random_subspace(rng, d, 2)
        ua = Subspace(u @ a.frame)
        ub = Subspace(u @ b.frame)
        assert fl.transversality_gap(a, b) == pytest.approx(
            fl.transversality_gap(ua, ub), abs=1e-10
        )
        assert fl.hausdorff_subspace_dist(a, b) == pytest.approx(
            fl.hausdorff_subspace_dist(ua, ub), abs=1e-10
        )
        assert fl.intersect(a, b).dim == fl.intersect(ua, ub).dim
        assert fl.subspace_sum(a, b).dim == fl.subspace_sum(ua, ub).dim
        m = random_sl(rng, d)
        assert np.allclose(
            fl.singular_gaps(m).gaps, fl.singular_gaps(u @ m @ u.conj().T).gaps, atol=1e-10
        )


def test_frame_drift_triggers_refactorization():
    q = np.eye(3, dtype=complex)[:, :2]
    q[0, 0] += 1e-6  # beyond FRAME_TOL
    s = Subspace(q)
    gram = s.frame.conj().T @ s.frame
    assert np.max(np.abs(gram - np.eye(2))) < 1e-12


# --- product SVD ----------------------------------------------------------------


def test_jacobi_svd_matches_lapack():
    rng = np.random.default_rng(9)
    for _ in range(25):
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        u, s, vh = jacobi_svd(a)
        assert np.allclose(u @ np.diag(s) @ vh, a, atol=1e-12)
        assert np.allclose(s, np.linalg.svd(a, compute_uv=False), rtol=1e-12)


def test_product_svd_matches_direct_product():
    rng = np.random.default_rng(10)
    factors = [random_sl(rng, 4) for _ in range(6)]
    acc = ProductSVD(4)
    direct = np.eye(4, dtype=complex)
    for f in factors:
        acc.absorb(f)
        direct = direct @ f
    s = np.linalg.svd(direct, compute_uv=False)
    assert np.allclose(np.sort(acc.logs)[::-1], np.log(s), atol=1e-10)
    # reconstruction
    rebuilt = acc.u @ np.diag(np.exp(acc.logs)) @ acc.vh
    assert np.allclose(rebuilt, direct, atol=1e-8 * np.linalg.norm(direct))


def test_product_svd_reciprocal_symmetry():
    # for det-1 factors, log singular values of the inverse-order inverse
    # product are the reversed negatives: a relative-accuracy stress test
    rng = np.random.default_rng(11)
    factors = [random_sl(rng, 3, scale=2.0) for _ in range(12)]
    fwd = ProductSVD(3)
    for f in factors:
        fwd.absorb(f)
    bwd = ProductSVD(3)
    for f in reversed(factors):
        bwd.absorb(np.linalg.inv(f))
    assert np.allclose(fwd.log_sigma(), -bwd.log_sigma()[::-1], atol=1e-10)
