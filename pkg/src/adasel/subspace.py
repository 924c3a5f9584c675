"""PCA subspaces, orthogonal complements, and principal angles.

Feature vectors are plain 1-D float64 arrays of length ``a`` (the ambient
dimension); subspaces are ``a x b`` matrices with orthonormal columns.
All functions are pure and deterministic: basis columns follow a fixed
sign convention (largest-magnitude component positive) so repeated runs
and serialized profiles are bit-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotOrthonormal, RankDeficient

ORTHO_TOL = 1e-8
# Residual column norm below which a principal angle is treated as exactly
# zero and its complement direction is free (it is multiplied by sin 0 = 0
# everywhere downstream).
DEGENERATE_SIN = 1e-8
# Singular values above this are too close to 1 for arccos to resolve the
# angle; those angles are recovered from the sine side instead.
SMALL_ANGLE_SVAL = 1.0 - 1e-8


def as_feature_vector(values) -> np.ndarray:
    """Validate and return a feature vector as a float64 1-D array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"feature vector must be 1-D, got shape {v.shape}")
    if v.size < 2:
        raise DimensionMismatch(f"feature dimension must be >= 2, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector contains NaN or Inf")
    return v


def as_feature_matrix(samples) -> np.ndarray:
    """Stack samples into an (n, a) float64 matrix, checking consistency."""
    if isinstance(samples, np.ndarray) and samples.ndim == 2:
        X = np.asarray(samples, dtype=np.float64)
    else:
        rows = list(samples)
        if not rows:
            raise ValueError("no samples given")
        lengths = {np.asarray(r).shape for r in rows}
        if len(lengths) > 1:
            raise DimensionMismatch(f"samples differ in length: {sorted(lengths)}")
        X = np.asarray(rows, dtype=np.float64)
    if X.shape[1] < 2:
        raise DimensionMismatch(f"feature dimension must be >= 2, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("samples contain NaN or Inf")
    return X


def _fix_signs(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip columns so each column's largest-magnitude entry is positive."""
    if M.shape[1] == 0:
        return M, np.ones(0)
    idx = np.argmax(np.abs(M), axis=0)
    signs = np.sign(M[idx, np.arange(M.shape[1])])
    signs[signs == 0] = 1.0
    return M * signs, signs


@dataclass
class SubspaceBasis:
    """Orthonormal basis of a b-dimensional subspace of R^a plus its complement.

    ``basis`` is a x b, ``complement`` is a x (a-b); stacked side by side they
    form an orthogonal a x a matrix (within tolerance).
    """

    basis: np.ndarray
    complement: np.ndarray

    @property
    def dim_ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim_subspace(self) -> int:
        return self.basis.shape[1]

    def validate(self, tol: float = 1e-10) -> None:
        """Raise NotOrthonormal if the orthogonality invariants fail."""
        a, b = self.basis.shape
        if not (1 <= b < a):
            raise DimensionMismatch(f"need 1 <= b < a, got a={a}, b={b}")
        if self.complement.shape != (a, a - b):
            raise DimensionMismatch(
                f"complement shape {self.complement.shape} != ({a}, {a - b})")
        if np.abs(self.basis.T @ self.basis - np.eye(b)).max() > tol:
            raise NotOrthonormal("basis columns are not orthonormal")
        if np.abs(self.complement.T @ self.complement - np.eye(a - b)).max() > tol:
            raise NotOrthonormal("complement columns are not orthonormal")
        if np.abs(self.basis.T @ self.complement).max() > tol:
            raise NotOrthonormal("complement is not orthogonal to basis")


@dataclass
class PrincipalDecomposition:
    """Principal angles between two subspaces with coupled rotation factors.

    ``angles`` are the canonical angles theta_k in [0, pi/2], non-decreasing;
    ``left_rotation`` (U) and ``right_rotation`` (V) come from the SVD
    x^T z = U diag(cos theta) V^T under the column sign convention.
    ``flow_complement`` is the a x b product (complement @ complement_rotation):
    the unit directions, orthogonal to the source subspace, along which the
    geodesic rotates.  ``complement_rotation`` itself is derived lazily since
    only the product enters the flow and kernel formulas.
    """

    angles: np.ndarray
    left_rotation: np.ndarray
    right_rotation: np.ndarray
    flow_complement: np.ndarray
    source: SubspaceBasis
    _rotation: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def complement_rotation(self) -> np.ndarray:
        """(a-b) x b matrix R with orthonormal columns, complement^T @ flow directions."""
        if self._rotation is None:
            self._rotation = self.source.complement.T @ self.flow_complement
        return self._rotation


def pca_basis(samples, b: int) -> SubspaceBasis:
    """Top-b principal directions of mean-centered samples, with complement.

    Parameters
    ----------
    samples : (n, a) array or sequence of length-a vectors, n >= 2
    b : target subspace dimension, 1 <= b < a

    Raises
    ------
    DimensionMismatch
        If samples differ in length or b is out of range.
    RankDeficient
        If the centered sample matrix has rank < b; the exception carries
        the achievable rank.
    """
    X = as_feature_matrix(samples)
    n, a = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if not (1 <= b < a):
        raise DimensionMismatch(f"need 1 <= b < a={a}, got b={b}")
    centered = X - X.mean(axis=0)
    _, svals, Vt = np.linalg.svd(centered, full_matrices=False)
    if svals.size == 0 or svals[0] == 0.0:
        rank = 0
    else:
        tol = max(n, a) * np.finfo(np.float64).eps * svals[0]
        rank = int(np.count_nonzero(svals > tol))
    if rank < b:
        raise RankDeficient(
            f"centered sample matrix has rank {rank} < requested b={b}", rank)
    basis, _ = _fix_signs(Vt[:b].T)
    return SubspaceBasis(basis=basis, complement=orthogonal_complement(basis))


def orthogonal_complement(basis: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(basis).

    Deterministic: uses the full Householder QR of the input and the same
    column sign convention as pca_basis.
    """
    basis = np.asarray(basis, dtype=np.float64)
    a, b = basis.shape
    if np.abs(basis.T @ basis - np.eye(b)).max() > ORTHO_TOL:
        raise NotOrthonormal("input columns are not orthonormal")
    q, _ = np.linalg.qr(basis, mode="complete")
    comp, _ = _fix_signs(q[:, b:])
    return comp


def _canonicalize_clusters(U: np.ndarray, V: np.ndarray, svals: np.ndarray,
                           tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Make U, V deterministic inside degenerate singular-value clusters.

    Within a cluster of equal singular values the SVD factors are defined
    only up to a common rotation; rotate them (Procrustes) so the U block
    is as close to the identity columns as possible.  Identical subspaces
    then yield U = V = I.  W and the geodesic are invariant to this choice.
    """
    b = svals.size
    start = 0
    for end in range(1, b + 1):
        if end < b and svals[start] - svals[end] <= tol:
            continue
        if end - start > 1:
            cols = slice(start, end)
            Y = U[cols, cols].T
            Up, _, Vpt = np.linalg.svd(Y)
            S = Up @ Vpt
            U = U.copy(); V = V.copy()
            U[:, cols] = U[:, cols] @ S
            V[:, cols] = V[:, cols] @ S
        start = end
    return U, V


def principal_angles(x: SubspaceBasis, z: SubspaceBasis) -> PrincipalDecomposition:
    """Principal angles and coupled rotations between two b-dim subspaces.

    Computes the SVD x^T z = U diag(cos theta_k) V^T (singular values clamped
    to [0, 1]) and the flow directions B solving
    ``B diag(sin theta_k) = -(I - x x^T) z V`` with columns for theta_k = 0
    filled by a deterministic orthonormal completion.  Angles too close to 0
    for arccos to resolve are recovered from the residual column norms
    (the sine side), so identical subspaces report exactly zero angles.
    """
    if x.dim_ambient != z.dim_ambient:
        raise DimensionMismatch(
            f"ambient dims differ: {x.dim_ambient} vs {z.dim_ambient}")
    if x.dim_subspace != z.dim_subspace:
        raise DimensionMismatch(
            f"subspace dims differ: {x.dim_subspace} vs {z.dim_subspace}")
    a, b = x.dim_ambient, x.dim_subspace
    if a - b < b:
        raise DimensionMismatch(
            f"complement rotation needs 2b <= a; got a={a}, b={b}")

    M = x.basis.T @ z.basis
    U, svals, Vt = np.linalg.svd(M)
    V = Vt.T
    U, V = _canonicalize_clusters(U, V, svals)
    U, signs = _fix_signs(U)
    V = V * signs
    svals = np.clip(svals, 0.0, 1.0)
    angles = np.arccos(svals)

    # flow directions: -(I - x x^T) z V, column k has norm sin(theta_k)
    ZV = z.basis @ V
    P = -(ZV - x.basis @ (x.basis.T @ ZV))
    norms = np.linalg.norm(P, axis=0)

    small = svals > SMALL_ANGLE_SVAL
    if np.any(small):
        angles[small] = np.arcsin(np.clip(norms[small], 0.0, 1.0))

    degenerate = norms < DEGENERATE_SIN
    B = np.zeros_like(P)
    good = ~degenerate
    B[:, good] = P[:, good] / norms[good]
    if np.any(degenerate):
        angles[degenerate] = 0.0
        anchor = np.hstack([x.basis, B[:, good]])
        q, _ = np.linalg.qr(anchor, mode="complete")
        fill = q[:, anchor.shape[1]:anchor.shape[1] + int(degenerate.sum())]
        B[:, degenerate] = _fix_signs(fill)[0]

    # sine-side refinement can reorder angles the SVD could not resolve;
    # re-sort all coupled factors together so the per-column pairing
    # (angle, u_k, v_k, B_k) stays exact
    order = np.argsort(angles, kind="stable")
    if not np.array_equal(order, np.arange(b)):
        angles = angles[order]
        U = U[:, order]
        V = V[:, order]
        B = B[:, order]
    return PrincipalDecomposition(
        angles=angles, left_rotation=U, right_rotation=V,
        flow_complement=B, source=x)
