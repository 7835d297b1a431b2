import numpy as np
import pytest

import flaglab as fl


@pytest.fixture(scope="session")
def schottky():
    return fl.preset("schottky")


@pytest.fixture(scope="session")
def sym3():
    return fl.preset("sym3")


@pytest.fixture(scope="session")
def sym4():
    return fl.preset("sym4")


@pytest.fixture(scope="session")
def octagon():
    return fl.preset("octagon")


@pytest.fixture(scope="session")
def octagon_sym3():
    return fl.preset("octagon-sym3")


@pytest.fixture(scope="session")
def directsum():
    return fl.preset("directsum")


@pytest.fixture(scope="session")
def sym4_flags(sym4):
    flags, _ = fl.limit_set_sample(sym4, [1, 2, 3], count=60, length=7, seed=11)
    return flags


@pytest.fixture(scope="session")
def sym3_flags(sym3):
    flags, _ = fl.limit_set_sample(sym3, [1, 2], count=40, length=8, seed=3)
    return flags


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_subspace(rng: np.random.Generator, d: int, k: int) -> "fl.Subspace":
    a = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    return fl.Subspace.from_vectors(a)


def random_sl(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    from flaglab.subspaces import det_normalize

    return det_normalize(
        rng.standard_normal((d, d)) * scale + 1j * rng.standard_normal((d, d)) * scale
    )


def proj_matrix_dist(a: np.ndarray, b: np.ndarray) -> float:
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    inner = np.vdot(a, b)
    phase = np.conj(inner) / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))
