'''
Dense symmetric / Hermitian matrix utilities used throughout corrlab.

Matrices are plain numpy arrays. ``as_sym`` and ``as_herm`` validate the
shape and return an exactly (anti)symmetrised copy, so every routine below
can rely on ``M[i, j] == M[j, i]`` bit for bit.
'''

__license__ = "GPL"
__version__ = "1.0.0"
__status__ = "Production"

import os
from dataclasses import dataclass, replace, fields

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, IndefiniteMatrix, NumericalFailure, UnknownName


@dataclass(frozen=True)
class Tolerances:
    '''
    Numerical thresholds shared by every decision procedure.

    Parameters
    ----------
    rank_rel : relative eigenvalue cutoff for numerical rank
    null_rel : relative singular value cutoff for nullspace dimensions
    tight_abs : absolute tightness threshold in angle space (radians)
    sdp_gap : relative duality gap target of the SDP solver
    psd_abs : minimum-eigenvalue slack for PSD verdicts
    feas_abs : absolute primal/dual residual target of the SDP solver
    '''
    rank_rel: float = 1e-7
    null_rel: float = 1e-8
    tight_abs: float = 1e-7
    sdp_gap: float = 1e-9
    psd_abs: float = 1e-8
    feas_abs: float = 1e-9

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError('tolerance %s must be strictly positive' % f.name)
        if not self.rank_rel < 1:
            raise ValueError('rank_rel must be below 1')

    def replace(self, **overrides):
        '''copy with some fields overridden (None values are ignored)'''
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_profile(cls, name='default'):
        try:
            return cls(**PROFILES[name])
        except KeyError:
            raise UnknownName('unknown tolerance profile %r (choose from %s)'
                              % (name, ', '.join(sorted(PROFILES))))

    @classmethod
    def from_env(cls, var='CORRLAB_TOL_PROFILE'):
        return cls.from_profile(os.environ.get(var) or 'default')


PROFILES = {
    'default': {},
    # the margin of a boundary point is only resolved to about sdp_gap, so sdp_gap < psd_abs
    'strict': dict(rank_rel=1e-8, null_rel=1e-9, tight_abs=1e-8, sdp_gap=1e-10, psd_abs=1e-9,
                   feas_abs=1e-10),
}


def as_sym(M):
    '''
    Validate a square real matrix and return its exact symmetrisation.

    Raises DimensionMismatch for non-square or empty input.
    '''
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatch('expected a square matrix, got shape %s' % (M.shape,))
    return 0.5 * (M + M.T)


def as_herm(M):
    '''complex counterpart of as_sym'''
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatch('expected a square matrix, got shape %s' % (M.shape,))
    return 0.5 * (M + M.conj().T)


def eig_sym(M):
    '''
    Eigendecomposition of a real symmetric matrix.

    Parameters
    ----------
    M : (d, d) array, symmetric

    Returns
    -------
    w : (d,) eigenvalues sorted in descending order
    V : (d, d) orthonormal eigenvectors, column V[:, i] belongs to w[i]
    '''
    M = as_sym(M)
    try:
        w, V = scipy.linalg.eigh(M)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure('symmetric eigensolver failed: %s' % e)
    return w[::-1], V[:, ::-1]


def _rank_from_eigs(w, tol):
    scale = np.max(np.abs(w)) if w.size else 0.0
    if scale == 0.0:
        return 0
    return int(np.sum(np.abs(w) > tol.rank_rel * scale))


def numerical_rank(M, tol=None):
    '''number of eigenvalues above rank_rel times the largest one in modulus'''
    tol = tol or Tolerances()
    w, _ = eig_sym(M)
    return _rank_from_eigs(w, tol)


def singular_rank(M, tol=None):
    '''numerical rank of a rectangular matrix from its singular values'''
    tol = tol or Tolerances()
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = scipy.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol.rank_rel * s[0]))


def nullspace_basis(M, tol=None):
    '''
    Orthonormal basis of the numerical nullspace of a symmetric matrix.

    Returns a (d, d - rank) array whose columns are the eigenvectors not
    counted by numerical_rank, so rank + basis size == d always.
    '''
    tol = tol or Tolerances()
    w, V = eig_sym(M)
    order = np.argsort(-np.abs(w), kind='stable')
    r = _rank_from_eigs(w, tol)
    return V[:, order[r:]]


def gram_factor(M, tol=None):
    '''
    Gram vectors of a PSD matrix in its rank-reduced dimension.

    Parameters
    ----------
    M : (d, d) array, PSD up to psd_abs

    Returns
    -------
    G : (d, r) array with r = numerical_rank(M) and G @ G.T ~= M;
        row i is the vector attached to index i
    '''
    tol = tol or Tolerances()
    w, V = eig_sym(M)
    scale = np.max(np.abs(w))
    if w[-1] < -tol.psd_abs * scale:
        raise IndefiniteMatrix('minimum eigenvalue %.3g below -psd_abs*|M|' % w[-1])
    r = _rank_from_eigs(w, tol)
    return V[:, :r] * np.sqrt(np.clip(w[:r], 0.0, None))


def min_eig(M):
    return eig_sym(M)[0][-1]


def is_psd(M, tol=None):
    tol = tol or Tolerances()
    w, _ = eig_sym(M)
    return bool(w[-1] >= -tol.psd_abs * max(1.0, np.max(np.abs(w))))


def hadamard(M, N):
    '''entrywise (Schur) product of two symmetric matrices'''
    M = as_sym(M)
    N = as_sym(N)
    if M.shape != N.shape:
        raise DimensionMismatch('hadamard: %s vs %s' % (M.shape, N.shape))
    return M * N


def truncate_psd(M, tol=None):
    '''
    Project a nearly PSD matrix onto its numerical range: eigenvalues at or
    below rank_rel * max are set to zero.
    '''
    tol = tol or Tolerances()
    w, V = eig_sym(M)
    r = _rank_from_eigs(np.clip(w, 0.0, None), tol)
    w = np.where(np.arange(w.size) < r, np.clip(w, 0.0, None), 0.0)
    return as_sym((V * w) @ V.T)
