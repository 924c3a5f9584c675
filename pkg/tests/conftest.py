import numpy as np
import pytest

from adasel.subspace import SubspaceBasis, _fix_signs, orthogonal_complement


def random_subspace(rng, a, b):
    """Random b-dim subspace of R^a as a SubspaceBasis."""
    q, _ = np.linalg.qr(rng.standard_normal((a, b)))
    q, _ = _fix_signs(q)
    return SubspaceBasis(basis=q, complement=orthogonal_complement(q))


def max_sine_angle(F, basis):
    """Largest principal angle (sine measure) between span(F) and span(basis).

    Resolves angles far below the ~1.5e-8 arccos floor.
    """
    resid = F - basis @ (basis.T @ F)
    return np.linalg.svd(resid, compute_uv=False).max()


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
