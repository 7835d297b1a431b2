import math

import numpy as np
import pytest

import flaglab as fl
import flaglab.words as W
from flaglab.certify import transport_flag
from flaglab.errors import InputError, NotAnosovError, PrecisionError
from flaglab.fibers import plucker
from flaglab.subspaces import Subspace, fubini_study, hausdorff_subspace_dist


# --- certificates -----------------------------------------------------------


def test_schottky_certified(schottky):
    cert = fl.certify_anosov(schottky, 1, 6)
    assert cert.verdict == "certified"
    assert cert.c1 >= 0.5
    assert cert.r_squared >= 0.95
    assert cert.supports()


def test_trivial_refuted():
    cert = fl.certify_anosov(fl.preset("trivial"), 1, 6)
    assert cert.verdict == "refuted"


def _jordan_gap(n: int) -> float:
    # closed-form top singular value of [[1, n], [0, 1]]
    s1 = (n + math.sqrt(n * n + 4)) / 2.0
    return math.log(s1)


def test_unipotent_refuted_with_jordan_oracle():
    rep = fl.preset("unipotent")
    sweep = fl.gap_sweep(rep, 6)
    for n in range(1, 7):
        assert sweep.minima[n - 1, 0] == pytest.approx(_jordan_gap(n), abs=1e-9)
    cert = fl.certify_anosov(rep, 1, 6, sweep=sweep)
    assert cert.verdict == "refuted"
    assert any("sublinear" in note for note in cert.notes)


def test_directsum_verdicts(directsum):
    assert fl.certify_anosov(directsum, 1, 4).verdict == "refuted"
    assert fl.certify_anosov(directsum, 3, 4).verdict == "refuted"
    assert fl.certify_anosov(directsum, 2, 4).verdict == "certified"


def test_octagon_not_refuted(octagon):
    cert = fl.certify_anosov(octagon, 1, 6)
    assert cert.verdict in ("certified", "inconclusive")


def test_radius_capped_by_relator(octagon):
    cert = fl.certify_anosov(octagon, 1, 9)
    assert cert.radius == 7
    assert any("capped" in n for n in cert.notes)


def test_certify_input_validation(schottky):
    with pytest.raises(InputError):
        fl.certify_anosov(schottky, 2, 6)
    with pytest.raises(InputError):
        fl.certify_anosov(schottky, 1, 2)


@pytest.mark.parametrize("name,radius", [("sym3", 5), ("sym4", 5), ("directsum", 4), ("schottky", 6)])
def test_duality_minima_and_verdicts(name, radius):
    rep = fl.preset(name)
    sweep = fl.gap_sweep(rep, radius)
    d = rep.dim
    for k in range(1, d):
        assert np.max(np.abs(sweep.minima[:, k - 1] - sweep.minima[:, d - k - 1])) < 1e-9
        ck = fl.certify_anosov(rep, k, radius, sweep=sweep)
        cdk = fl.certify_anosov(rep, d - k, radius, sweep=sweep)
        assert ck.verdict == cdk.verdict


# --- attractors ---------------------------------------------------------------


def test_cartan_attractor_diagonal():
    m = np.diag([4.0, 2.0, 1.0])
    a1 = fl.cartan_attractor(m, 1)
    a2 = fl.cartan_attractor(m, 2)
    assert fubini_study(a1, Subspace.coordinate(3, [0])) < 1e-12
    assert hausdorff_subspace_dist(a2, Subspace.coordinate(3, [0, 1])) < 1e-12


def test_cartan_attractor_gap_precondition():
    with pytest.raises(PrecisionError, match="lengthen"):
        fl.cartan_attractor(np.eye(3), 1)


def test_cartan_attractor_residual_and_equivariance(schottky):
    m = schottky.evaluate((1, 2, 1, 1, 2))
    sub, resid = fl.cartan_attractor(m, 1, return_residual=True)
    g = schottky.evaluate((2, 1))
    moved = fl.cartan_attractor(g @ m, 1)
    direct = Subspace.from_vectors(g @ sub.frame)
    assert fubini_study(moved, direct) <= 50 * resid + 1e-12


def test_boundary_sample_eigenline_oracle(schottky):
    flag = fl.boundary_sample(schottky, (1,), [1])
    vals, vecs = np.linalg.eig(schottky.evaluate((1,)))
    top = Subspace.line(vecs[:, int(np.argmax(np.abs(vals)))])
    assert fubini_study(flag.space(1), top) < 1e-8


def test_boundary_sample_sym_weight_oracle(sym3):
    # for a diagonalizable word, the flag is spanned by the top weight vectors
    w = (1, 2, 1)
    flag = fl.boundary_sample(sym3, w, [1, 2])
    vals, vecs = np.linalg.eig(sym3.evaluate(w))
    order = np.argsort(np.abs(vals))[::-1]
    assert fubini_study(flag.space(1), Subspace.line(vecs[:, order[0]])) < 1e-8
    top2 = Subspace.from_vectors(vecs[:, order[:2]])
    assert hausdorff_subspace_dist(flag.space(2), top2) < 1e-8


def test_boundary_sample_equivariance(sym4):
    w = (1, 2, -1, 2, 1)
    gamma = (2, 1, -2)
    flag = fl.boundary_sample(sym4, w, [1, 2, 3])
    lhs = transport_flag(sym4, gamma, flag)
    conj = W.concat(sym4.presentation, gamma, w, W.invert(gamma))
    rhs = fl.boundary_sample(sym4, conj, [1, 2, 3])
    assert fl.flag_dist(lhs, rhs) < 1e-6


def test_boundary_sample_stability_under_more_power(sym4):
    w = (1, 2, 2, -1, 2)
    f1 = fl.boundary_sample(sym4, w, [1, 2, 3], target_gap=14.0)
    f2 = fl.boundary_sample(sym4, w, [1, 2, 3], target_gap=28.0)
    assert fl.flag_dist(f1, f2) < 1e-6


def test_boundary_sample_nesting_postcondition(sym4_flags):
    for flag in sym4_flags[:10]:
        for k1, k2 in zip(flag.ks, flag.ks[1:]):
            assert flag.space(k2).contains(flag.space(k1), tol=1e-6)


def test_boundary_sample_rejects_trivial_word(schottky):
    with pytest.raises(InputError):
        fl.boundary_sample(schottky, (1, -1), [1])
    with pytest.raises(NotAnosovError):
        fl.boundary_sample(fl.preset("trivial"), (1,), [1])


def test_limit_set_sample_contract(schottky):
    flags, failures = fl.limit_set_sample(schottky, [1], count=1, length=6, seed=2)
    assert len(flags) == 1 and not failures
    again, _ = fl.limit_set_sample(schottky, [1], count=1, length=6, seed=2)
    assert flags[0].source == again[0].source


def test_limit_set_pairwise_transversality(sym4_flags, sym4):
    d = sym4.dim
    worst = 1.0
    for i in range(0, 30):
        for j in range(30):
            if i == j:
                continue
            x, y = sym4_flags[i], sym4_flags[j]
            worst = min(worst, fl.transversality_gap(x.space(1), y.space(d - 1)))
    assert worst > 0.0


def test_limit_set_invariance_under_translation(sym3):
    flags, _ = fl.limit_set_sample(sym3, [1, 2], count=12, length=7, seed=9)
    gamma = (1,)
    for f in flags:
        moved = transport_flag(sym3, gamma, f)
        fresh = fl.boundary_sample(
            sym3, W.concat(sym3.presentation, gamma, f.source, W.invert(gamma)), [1, 2]
        )
        assert fl.flag_dist(moved, fresh) < 1e-4


def test_wedge_consistency_of_flags(sym4):
    """The k-space of a flag maps to the line of the wedge rep's flag under
    the Plucker embedding."""
    wrep = fl.wedge_rep(sym4, 2)
    for word in [(1, 2, 1), (2, -1, 2, 1), (1, 1, 2)]:
        f = fl.boundary_sample(sym4, word, [2])
        fw = fl.boundary_sample(wrep, word, [1])
        assert fubini_study(plucker(f.space(2)), fw.space(1)) < 1e-6
