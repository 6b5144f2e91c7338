'''
PSD completions of correlators.

A correlator C (n x m) sits in the off-diagonal block of a partially
specified (n+m) x (n+m) unit-diagonal matrix; C is a quantum correlator
exactly when that partial matrix has a positive semidefinite completion.
Index convention: rows 0..n-1 belong to the first party, rows n..n+m-1 to
the second, so the correlator entry c[x, y] sits at position (x, n+y).

Feasibility is decided with a margin problem,

    max t  s.t.  X - t I psd,  X_ii = 1,  X_{x,n+y} = c[x, y],

so that every verdict carries a signed distance to the boundary. Its dual
block is the trace-normalised completion dual Z = sum l_i E_ii + sum l_xy E_xy.
'''

__license__ = "GPL"
__version__ = "1.0.0"
__status__ = "Production"

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import NumericalFailure, OutOfRange, WrongShape
from .linalg import Tolerances, as_sym, hadamard, numerical_rank, singular_rank
from .sdp import OPTIMAL, SdpProblem, SdpSolver, dual_nondegenerate

logger = logging.getLogger(__name__)

# entries beyond 1 + SLACK in modulus are input errors rather than roundoff
SLACK = 1e-10


def as_correlator(C):
    '''
    Validate and return C as a 2-d float array with entries in [-1, 1].

    Entries within SLACK of the interval are clipped onto it.
    '''
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.ndim != 2 or C.size == 0:
        raise WrongShape('a correlator is a nonempty n x m matrix, got shape %s' % (C.shape,))
    if not np.all(np.isfinite(C)):
        raise OutOfRange('correlator entries must be finite')
    if np.any(np.abs(C) > 1.0 + SLACK):
        raise OutOfRange('correlator entry %.17g outside [-1, 1]' % C.flat[np.argmax(np.abs(C))])
    return np.clip(C, -1.0, 1.0)


def angles(C):
    '''theta[x, y] = arccos(c[x, y]) in [0, pi]'''
    return np.arccos(as_correlator(C))


def edge_matrix(d, i, j):
    '''E_ij = (e_i e_j^T + e_j e_i^T) / 2, with E_ii = e_i e_i^T'''
    E = np.zeros((d, d))
    E[i, j] += 0.5
    E[j, i] += 0.5
    return E


def block_pattern(n, m):
    '''free positions of the uniqueness test: off-diagonals inside each party block'''
    return ([(i, j) for i in range(n) for j in range(i + 1, n)]
            + [(n + i, n + j) for i in range(m) for j in range(i + 1, m)])


def offdiagonal_pattern(d):
    return [(i, j) for i in range(d) for j in range(i + 1, d)]


def partial_matrix(C):
    '''(n+m) x (n+m) partial matrix: unit diagonal, C off the diagonal blocks, NaN elsewhere'''
    C = as_correlator(C)
    n, m = C.shape
    P = np.full((n + m, n + m), np.nan)
    P[:n, n:] = C
    P[n:, :n] = C.T
    np.fill_diagonal(P, 1.0)
    return P


def project(X, n):
    '''Pi(X): the off-diagonal block of a completion'''
    return np.array(X)[:n, n:].copy()


def normalize_diag(X):
    '''congruence by diag(X)^-1/2, so the result has an exact unit diagonal'''
    X = as_sym(X)
    s = 1.0 / np.sqrt(np.clip(np.diag(X), 1e-300, None))
    Y = as_sym(X * np.outer(s, s))
    np.fill_diagonal(Y, 1.0)
    return Y


def multipliers_to_matrix(lam_i, lam_xy):
    '''Z = sum l_i E_ii + sum l_xy E_{x,n+y}'''
    lam_xy = np.atleast_2d(lam_xy)
    n, m = lam_xy.shape
    Z = np.diag(np.asarray(lam_i, dtype=float))
    Z[:n, n:] = 0.5 * lam_xy
    Z[n:, :n] = 0.5 * lam_xy.T
    return Z


def build_completion_sdp(C):
    '''
    Feasibility SDP of the completion problem (zero objective).

    Constraints are ordered diagonal first (<E_ii, X> = 1, i < n+m) then
    the cross entries (<E_{x,n+y}, X> = c[x, y]) in row-major order.
    '''
    C = as_correlator(C)
    n, m = C.shape
    d = n + m
    cons = [(edge_matrix(d, i, i), 1.0) for i in range(d)]
    cons += [(edge_matrix(d, x, n + y), C[x, y]) for x in range(n) for y in range(m)]
    return SdpProblem.from_constraints(np.zeros((d, d)), cons)


def build_margin_sdp(C):
    '''
    Margin form of the completion problem.

    The variable is blockdiag(W, s) of order n+m+1 with X = W + (s - L) I,
    so maximising s maximises the smallest eigenvalue t = s - L of the
    completion X. L = max(1, |C|_2) keeps s strictly positive on the
    feasible set.

    Returns
    -------
    (SdpProblem, L)
    '''
    C = as_correlator(C)
    n, m = C.shape
    d = n + m
    N = d + 1
    L = max(1.0, float(scipy.linalg.svdvals(C)[0]))
    cons = []
    for i in range(d):
        A = edge_matrix(N, i, i)
        A[d, d] = 1.0
        cons.append((A, 1.0 + L))
    cons += [(edge_matrix(N, x, n + y), C[x, y]) for x in range(n) for y in range(m)]
    obj = np.zeros((N, N))
    obj[d, d] = 1.0
    return SdpProblem.from_constraints(obj, cons), L


@dataclass
class CompletionResult:
    '''
    Outcome of the completion problem for one correlator.

    ``representative`` says which completion was returned: ``unique``,
    ``max_rank`` (boundary point, several completions, the analytic centre
    of the optimal face) or ``max_margin`` (interior point, the completion
    with the largest smallest eigenvalue).
    '''
    member: bool
    margin: float
    boundary: bool
    completion: Optional[np.ndarray]
    unique: bool
    dual_certificate: Optional[np.ndarray]
    lam_i: Optional[np.ndarray]
    lam_xy: Optional[np.ndarray]
    rank_C: int
    rank_completion: int
    rank_hadamard: int
    rank_dual: int
    null_dim: int
    representative: str
    n: int
    m: int

    @property
    def strict_complementarity(self):
        return self.member and self.rank_completion + self.rank_dual == self.n + self.m


def find_completion(C, tol=None, start=None):
    '''
    Solve the completion problem.

    Parameters
    ----------
    C : (n, m) correlator
    tol : Tolerances
    start : optional (X0, y0, Z0) starting iterate for the margin SDP

    Returns
    -------
    CompletionResult. For members on the boundary the dual certificate is the
    trace-one maximal-rank dual Z; for interior points the completion dual is
    zero; for non-members it is a separating certificate with
    sum l_i + sum l_xy c_xy equal to the (negative) margin.
    '''
    tol = tol or Tolerances()
    C = as_correlator(C)
    n, m = C.shape
    d = n + m
    prob, L = build_margin_sdp(C)
    sol = SdpSolver(tol).solve(prob, start=start)
    if sol.status != OPTIMAL:
        raise NumericalFailure('completion SDP ended with status %s after %d iterations'
                               % (sol.status, sol.iterations))
    t = sol.primal_obj - L
    W = sol.X[:d, :d]
    lam_i = sol.y[:d].copy()
    lam_xy = sol.y[d:].reshape(n, m).copy()
    scale = lam_i.sum()
    if scale > 0:
        lam_i /= scale
        lam_xy /= scale
    member = t >= -tol.psd_abs
    boundary = abs(t) <= tol.psd_abs
    rank_C = singular_rank(C, tol)

    if not member:
        logger.info('not a member: margin %.3e', t)
        return CompletionResult(member=False, margin=t, boundary=False, completion=None,
                                unique=False,
                                dual_certificate=multipliers_to_matrix(lam_i, lam_xy),
                                lam_i=lam_i, lam_xy=lam_xy, rank_C=rank_C,
                                rank_completion=0, rank_hadamard=0, rank_dual=0,
                                null_dim=0, representative='none', n=n, m=m)

    if boundary:
        if not sol.polished:
            logger.debug('boundary completion left unpolished; ranks read from the raw iterate')
        X = normalize_diag(W)
        Z = multipliers_to_matrix(lam_i, lam_xy)
    else:
        X = normalize_diag(W + t * np.eye(d))
        lam_i = np.zeros(d)
        lam_xy = np.zeros((n, m))
        Z = np.zeros((d, d))
    nd = dual_nondegenerate(Z, block_pattern(n, m), tol)
    if nd.nondegenerate:
        rep = 'unique'
    else:
        rep = 'max_rank' if boundary else 'max_margin'
    res = CompletionResult(member=True, margin=t, boundary=boundary, completion=X,
                           unique=nd.nondegenerate, dual_certificate=Z,
                           lam_i=lam_i, lam_xy=lam_xy, rank_C=rank_C,
                           rank_completion=numerical_rank(X, tol),
                           rank_hadamard=numerical_rank(hadamard(X, X), tol),
                           rank_dual=numerical_rank(Z, tol) if np.any(Z) else 0,
                           null_dim=nd.null_dim, representative=rep, n=n, m=m)
    logger.debug('completion: margin %.3e rank %d hadamard %d dual rank %d null %d (%s)',
                 t, res.rank_completion, res.rank_hadamard, res.rank_dual, nd.null_dim, rep)
    return res


def require_2x2(C):
    C = as_correlator(C)
    if C.shape != (2, 2):
        raise WrongShape('operation defined for 2 x 2 correlators only, got %s' % (C.shape,))
    return C


def completion_interval_2x2(C, tol=None):
    '''
    Admissible range of theta_34 = arccos(X[2, 3]) for a 2 x 2 correlator.

    Rows of C are the first party (positions 0, 1), columns the second
    (positions 2, 3). Each clique {x, 2, 3} of the chordal pattern is a
    3 x 3 correlation matrix, whose angle conditions bound theta_34.

    Returns
    -------
    (lo, hi) in radians, or None when the interval is empty (lo > hi + tight_abs)
    '''
    tol = tol or Tolerances()
    th = angles(require_2x2(C))
    s = th.sum(axis=1)
    lo = max(abs(th[0, 0] - th[0, 1]), abs(th[1, 0] - th[1, 1]))
    hi = min(s[0], s[1], 2 * np.pi - s[0], 2 * np.pi - s[1])
    if lo > hi + tol.tight_abs:
        return None
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return float(lo), float(hi)


def psd3_angles(theta1, theta2, theta3, tol=None):
    '''
    PSD test of the 3 x 3 unit-diagonal matrix with off-diagonal cosines.

    Returns
    -------
    (psd, singular) booleans, each inequality read within tight_abs
    '''
    tol = tol or Tolerances()
    th = np.array([theta1, theta2, theta3], dtype=float)
    if np.any(th < -tol.tight_abs) or np.any(th > np.pi + tol.tight_abs):
        raise OutOfRange('angles must lie in [0, pi], got %s' % th)
    slack = np.array([th[1] + th[2] - th[0], th[0] + th[2] - th[1],
                      th[0] + th[1] - th[2], 2 * np.pi - th.sum()])
    psd = bool(np.all(slack >= -tol.tight_abs))
    return psd, bool(psd and np.any(np.abs(slack) <= tol.tight_abs))


def chordal_membership_2x2(C, tol=None):
    '''SDP-free membership test for 2 x 2 correlators'''
    return completion_interval_2x2(C, tol) is not None


def chordal_completion_2x2(C, theta34):
    '''
    Maximum-determinant completion of a 2 x 2 correlator with X[2, 3] = cos(theta34).

    The only remaining free entry X[0, 1] is filled through the clique
    separator S = {2, 3}: X[0, 1] = X[0, S] X[S, S]^+ X[S, 1].
    '''
    C = require_2x2(C)
    c34 = np.cos(theta34)
    S = np.array([[1.0, c34], [c34, 1.0]])
    c12 = float(C[0] @ scipy.linalg.pinv(S) @ C[1])
    X = np.eye(4)
    X[:2, 2:] = C
    X[2:, :2] = C.T
    X[0, 1] = X[1, 0] = c12
    X[2, 3] = X[3, 2] = c34
    return X
