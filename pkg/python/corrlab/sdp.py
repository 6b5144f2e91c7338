'''
Dense primal-dual interior-point solver for small semidefinite programs.

The canonical pair is

    (P)  sup <C, X>   s.t. <A_i, X> = b_i,  X psd
    (D)  inf b.y      s.t. sum_i y_i A_i - C = Z,  Z psd

solved with the HKM search direction from an infeasible start, Mehrotra
predictor-corrector steps and a least-squares Schur complement solve, so
redundant constraint sets are tolerated. Iterates follow the central path,
which makes the limit point maximally complementary: when the optimal face
of either problem contains matrices of different ranks, the solver returns
one of maximal rank.
'''

__license__ = "GPL"
__version__ = "1.0.0"
__status__ = "Production"

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NumericalFailure
from .linalg import Tolerances, as_sym, eig_sym, numerical_rank, truncate_psd

logger = logging.getLogger(__name__)

OPTIMAL = 'Optimal'
PRIMAL_INFEASIBLE = 'PrimalInfeasible'
DUAL_INFEASIBLE = 'DualInfeasible'
NUMERICAL_FAILURE = 'NumericalFailure'


@dataclass
class SdpProblem:
    '''
    Canonical-form SDP.

    Parameters
    ----------
    C : (d, d) symmetric objective
    A : (k, d, d) stack of symmetric constraint matrices
    b : (k,) right-hand sides
    '''
    C: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.C = as_sym(self.C)
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 3 or A.shape[0] < 1:
            raise DimensionMismatch('need a nonempty (k, d, d) constraint stack')
        if A.shape[1:] != self.C.shape:
            raise DimensionMismatch('constraint order %s does not match objective %s'
                                    % (A.shape[1:], self.C.shape))
        self.A = 0.5 * (A + A.transpose(0, 2, 1))
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.b.size != self.A.shape[0]:
            raise DimensionMismatch('%d constraints but %d right-hand sides'
                                    % (self.A.shape[0], self.b.size))

    @classmethod
    def from_constraints(cls, C, constraints):
        '''build from an objective and a list of (A_i, b_i) pairs'''
        constraints = list(constraints)
        if not constraints:
            raise DimensionMismatch('constraint list is empty')
        return cls(C, np.array([a for a, _ in constraints], dtype=float),
                   np.array([bi for _, bi in constraints], dtype=float))

    @property
    def dim(self):
        return self.C.shape[0]

    @property
    def constraints(self):
        return list(zip(self.A, self.b))

    def apply(self, X):
        '''A(X): vector of <A_i, X>'''
        return np.einsum('kij,ij->k', self.A, X)

    def adjoint(self, y):
        '''A*(y) = sum_i y_i A_i'''
        return np.einsum('k,kij->ij', y, self.A)


@dataclass
class SdpSolution:
    X: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    status: str
    primal_obj: float = np.nan
    dual_obj: float = np.nan
    gap: float = np.nan
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)
    polished: bool = False

    @property
    def optimal(self):
        return self.status == OPTIMAL


@dataclass
class PairReport:
    '''certificate check of a candidate primal-dual pair'''
    weak_duality_ok: bool
    feasible_primal: bool
    feasible_dual: bool
    complementarity_gap: float
    primal_obj: float
    dual_obj: float
    primal_residual: float
    dual_residual: float


@dataclass
class Nondegeneracy:
    nondegenerate: bool
    null_dim: int


def _inner(X, Y):
    return float(np.sum(X * Y))


def _inv_psd(M, power=1.0):
    '''M^-power of a psd matrix, eigenvalues clipped at machine precision times the largest'''
    w, V = eig_sym(M)
    floor = np.finfo(float).eps * max(w[0], np.finfo(float).tiny)
    return as_sym((V * np.clip(w, floor, None) ** -power) @ V.T)


def _sym_from_upper(v, r):
    '''symmetric r x r matrix from its upper triangle in np.triu_indices order'''
    U = np.zeros((r, r))
    U[np.triu_indices(r)] = v
    return U + U.T - np.diag(np.diag(U))


class SdpSolver(object):
    '''
    Infeasible-start HKM predictor-corrector interior-point method.

    Parameters
    ----------
    tol : Tolerances; sdp_gap and feas_abs are the stopping targets
    max_iter : iteration cap
    step_fraction : fraction of the distance to the cone boundary taken
    refine_factor : once the targets are met, iterate on until the gap is
        below refine_factor * sdp_gap (or refine_iter more steps were taken)
    refine_iter : cap on the extra iterations
    split_ratio : polish assigns a direction to the range of X (of Z) when its
        normalised Rayleigh quotient exceeds the other one by this factor
    '''

    def __init__(self, tol=None, max_iter=200, step_fraction=0.98, refine_factor=1e-4,
                 refine_iter=8, split_ratio=100.0):
        self.tol = tol or Tolerances()
        self.max_iter = max_iter
        self.step_fraction = step_fraction
        self.refine_factor = refine_factor
        self.refine_iter = refine_iter
        self.split_ratio = split_ratio

    def initial_point(self, p):
        d = p.dim
        normA = np.sqrt(np.einsum('kij,kij->k', p.A, p.A))
        normC = np.linalg.norm(p.C)
        xi = max(10.0, np.sqrt(d), d * np.max((1.0 + np.abs(p.b)) / (1.0 + normA)))
        eta = max(10.0, np.sqrt(d), 1.0 + max(normC, np.max(normA)))
        return xi * np.eye(d), np.zeros(p.b.size), eta * np.eye(d)

    @staticmethod
    def max_step(X, dX):
        '''largest alpha with X + alpha dX psd, from the spectrum of X^-1/2 dX X^-1/2'''
        S = _inv_psd(X, 0.5)
        lam = eig_sym(S @ dX @ S)[0]
        if lam[-1] >= 0:
            return np.inf
        return -1.0 / lam[-1]

    def _direction(self, p, X, Zinv, M, rp, Rd, Rc):
        rhs = p.apply(Rc) + p.apply(X @ Rd @ Zinv) - rp
        dy = scipy.linalg.lstsq(M, rhs)[0]
        dZ = p.adjoint(dy) - Rd
        K = Rc - X @ dZ @ Zinv
        dX = 0.5 * (K + K.T)
        return dX, dy, dZ

    def _certificate(self, p, X, y, Z):
        '''return an infeasibility status if the iterate is a certificate ray'''
        by = float(p.b @ y)
        if by < 0:
            ray = p.adjoint(y) / -by
            if eig_sym(ray)[0][-1] >= -1e-8:
                return PRIMAL_INFEASIBLE
        cx = _inner(p.C, X)
        if cx > 0 and np.linalg.norm(p.apply(X)) <= 1e-8 * cx:
            return DUAL_INFEASIBLE
        return None

    def _scales(self, p):
        return 1.0 + np.max(np.abs(p.b)), 1.0 + np.linalg.norm(p.C)

    def polish(self, p, X, y, Z):
        '''
        Facial-reduction cleanup of a near-optimal pair.

        The eigenvectors of X/|X| - Z/|Z| are sorted into V (the range of X),
        U (the range of Z) and the directions in neither, which appear when
        complementarity is not strict. X is re-solved as V W V^T and Z as
        U S U^T from the linear constraints, each by the least-norm correction
        of the current iterate, so <X, Z> vanishes up to roundoff and the
        ranks are exact.

        Returns
        -------
        (X, y, Z), or None when the split is not clean (the discarded parts
        exceed sqrt(sdp_gap) relative to the matrix norms), the corrected pair
        misses the residual targets or W, S leave the psd cone
        '''
        tol = self.tol
        d = p.dim
        k = p.b.size
        nX = np.linalg.norm(X, 2)
        nZ = np.linalg.norm(Z, 2)
        D = np.zeros((d, d))
        if nX > 0:
            D += X / nX
        if nZ > 0:
            D -= Z / nZ
        _, Q = eig_sym(D)
        xs = np.einsum('ai,ab,bi->i', Q, X, Q) / (nX or 1.0)
        zs = np.einsum('ai,ab,bi->i', Q, Z, Q) / (nZ or 1.0)
        inX = xs > self.split_ratio * zs
        inZ = zs > self.split_ratio * xs
        V = Q[:, inX]
        U = Q[:, inZ]
        r, q = V.shape[1], U.shape[1]
        notX = Q[:, ~inX]
        notZ = Q[:, ~inZ]
        dropX = np.linalg.norm(notX.T @ X @ notX, 2) if notX.size else 0.0
        dropZ = np.linalg.norm(notZ.T @ Z @ notZ, 2) if notZ.size else 0.0
        limit = np.sqrt(tol.sdp_gap)
        if dropX > limit * nX or dropZ > limit * nZ:
            logger.debug('polish skipped: no clean split (%.2e, %.2e)', dropX, dropZ)
            return None

        if r:
            iu = np.triu_indices(r)
            B = np.einsum('ai,kab,bj->kij', V, p.A, V)
            G = B[:, iu[0], iu[1]] * np.where(iu[0] == iu[1], 1.0, 2.0)
            W = V.T @ X @ V
            dw = scipy.linalg.lstsq(G, p.b - p.apply(V @ W @ V.T))[0]
            W = as_sym(W + _sym_from_upper(dw, r))
        else:
            W = np.zeros((0, 0))
        Xp = as_sym(V @ W @ V.T)

        iu = np.triu_indices(q)
        E = np.array([np.outer(U[:, i], U[:, j]) + (np.outer(U[:, j], U[:, i]) if i != j else 0)
                      for i, j in zip(*iu)]).reshape(-1, d * d)
        G = np.hstack([p.A.reshape(k, -1).T, -E.T]) if q else p.A.reshape(k, -1).T
        S = U.T @ Z @ U
        delta = scipy.linalg.lstsq(G, (p.C - p.adjoint(y) + U @ S @ U.T).ravel())[0]
        yp = y + delta[:k]
        S = as_sym(S + _sym_from_upper(delta[k:], q)) if q else np.zeros((0, 0))
        Zp = as_sym(U @ S @ U.T)

        # residual slack allowed for the eigenvector error of the split
        rel = (dropX / nX if nX > 0 else 0.0) + (dropZ / nZ if nZ > 0 else 0.0)
        anorm = np.max(np.sqrt(np.einsum('kij,kij->k', p.A, p.A)))
        bscale, cscale = self._scales(p)
        pres = float(np.max(np.abs(p.b - p.apply(Xp))))
        dres = float(np.linalg.norm(p.adjoint(yp) - p.C - Zp))
        if (pres > max(tol.feas_abs * bscale, 10 * anorm * nX * rel)
                or dres > max(tol.feas_abs * cscale, 10 * nZ * rel)):
            logger.debug('polish rejected: residuals %.2e %.2e', pres, dres)
            return None
        for M in (W, S):
            if M.size:
                wm = eig_sym(M)[0]
                if wm[-1] < -tol.psd_abs * max(abs(wm[0]), np.finfo(float).tiny):
                    logger.debug('polish rejected: face block has eigenvalue %.2e', wm[-1])
                    return None
        logger.debug('polish: rank split %d/%d, residuals %.2e %.2e', r, q, pres, dres)
        return Xp, yp, Zp

    def solve(self, p, start=None):
        '''
        Solve the primal-dual pair.

        Parameters
        ----------
        p : SdpProblem
        start : optional (X0, y0, Z0) with X0, Z0 positive definite;
            default is a scaled identity pair with y0 = 0

        Returns
        -------
        SdpSolution; when status is PrimalInfeasible, y is scaled to
        b.y = -1 and sum y_i A_i is psd (an improving ray of the dual),
        when DualInfeasible, X is scaled to <C, X> = 1 with A(X) ~ 0.
        Optimal pairs are passed through polish; if the iteration breaks
        down, the best iterate within sqrt(sdp_gap) of optimality is
        accepted when its polished pair passes the checks.
        '''
        tol = self.tol
        d = p.dim
        if start is None:
            X, y, Z = self.initial_point(p)
        else:
            X, y, Z = as_sym(start[0]), np.asarray(start[1], dtype=float).copy(), as_sym(start[2])
            if X.shape != p.C.shape or Z.shape != p.C.shape or y.size != p.b.size:
                raise DimensionMismatch('starting point does not match the problem')
        history = []
        bscale, cscale = self._scales(p)
        status = NUMERICAL_FAILURE
        Avec = p.A.reshape(p.A.shape[0], -1)
        best = None
        converged_at = None

        it = 0
        for it in range(self.max_iter + 1):
            rp = p.b - p.apply(X)
            Rd = p.C - p.adjoint(y) + Z
            pobj = _inner(p.C, X)
            dobj = float(p.b @ y)
            gap = _inner(X, Z)
            pres = float(np.max(np.abs(rp)))
            dres = float(np.linalg.norm(Rd))
            history.append((pobj, dobj, gap, pres, dres))
            logger.debug('iter %3d pobj % .10e dobj % .10e gap %.3e pres %.3e dres %.3e',
                         it, pobj, dobj, gap, pres, dres)

            feasible = pres <= tol.feas_abs * bscale and dres <= tol.feas_abs * cscale
            if feasible and (best is None or gap < best[0]):
                best = (gap, X, y, Z)
            if feasible and gap <= tol.sdp_gap * (1.0 + abs(pobj)):
                if converged_at is None:
                    converged_at = it
                if (gap <= self.refine_factor * tol.sdp_gap * (1.0 + abs(pobj))
                        or it - converged_at >= self.refine_iter):
                    break
            elif converged_at is not None:
                break
            else:
                cert = self._certificate(p, X, y, Z)
                if cert == PRIMAL_INFEASIBLE:
                    y = y / -dobj
                    Z = p.adjoint(y)
                    status = cert
                    break
                if cert == DUAL_INFEASIBLE:
                    X = X / pobj
                    status = cert
                    break
            if it == self.max_iter:
                if converged_at is None:
                    logger.warning('SDP iteration cap %d reached (gap %.3e)', self.max_iter, gap)
                break

            mu = gap / d
            try:
                Zinv = _inv_psd(Z)
                T = np.einsum('ab,kbc,cd->kad', X, p.A, Zinv).reshape(Avec.shape)
                M = Avec @ T.T
                M = 0.5 * (M + M.T)

                # predictor
                dXa, dya, dZa = self._direction(p, X, Zinv, M, rp, Rd, -X)
                ap = min(1.0, self.max_step(X, dXa))
                ad = min(1.0, self.max_step(Z, dZa))
                mu_aff = _inner(X + ap * dXa, Z + ad * dZa) / d
                sigma = min(1.0, max(0.0, mu_aff / mu) ** 3)

                # corrector
                Rc = sigma * mu * Zinv - X - dXa @ dZa @ Zinv
                dX, dy, dZ = self._direction(p, X, Zinv, M, rp, Rd, Rc)
                ap = min(1.0, self.step_fraction * self.max_step(X, dX))
                ad = min(1.0, self.step_fraction * self.max_step(Z, dZ))
            except (np.linalg.LinAlgError, ValueError, NumericalFailure) as e:
                if converged_at is None:
                    logger.warning('SDP linear algebra failure at iteration %d: %s', it, e)
                break
            if max(ap, ad) < 1e-12:
                if converged_at is None:
                    logger.warning('SDP stalled at iteration %d (gap %.3e)', it, gap)
                break

            X = as_sym(X + ap * dX)
            y = y + ad * dy
            Z = as_sym(Z + ad * dZ)

        near = None
        if status == NUMERICAL_FAILURE and best is not None:
            gap_b, bX, by, bZ = best
            if converged_at is not None:
                X, y, Z = bX, by, bZ
                status = OPTIMAL
            elif gap_b <= np.sqrt(tol.sdp_gap) * (1.0 + abs(_inner(p.C, bX))):
                near = (bX, by, bZ)
        polished = False
        if status == OPTIMAL or near is not None:
            out = self.polish(p, *(near or (X, y, Z)))
            if out is not None:
                X, y, Z = out
                polished = True
                if near is not None:
                    logger.info('accepted the polished best iterate after solver breakdown')
                    status = OPTIMAL

        pobj = _inner(p.C, X)
        dobj = float(p.b @ y)
        return SdpSolution(X=X, y=y, Z=Z, status=status, primal_obj=pobj, dual_obj=dobj,
                           gap=abs(_inner(X, Z)),
                           primal_residual=float(np.max(np.abs(p.b - p.apply(X)))),
                           dual_residual=float(np.linalg.norm(p.adjoint(y) - p.C - Z)),
                           iterations=it, history=history, polished=polished)


def solve(p, tol=None):
    '''solve p with a fresh SdpSolver'''
    return SdpSolver(tol).solve(p)


def check_pair(p, X, y, Z, tol=None):
    '''
    Evaluate weak duality, feasibility and complementarity of (X, y, Z).

    Parameters
    ----------
    p : SdpProblem
    X, Z : (d, d) symmetric candidates
    y : (k,) multipliers

    Returns
    -------
    PairReport
    '''
    tol = tol or Tolerances()
    X = as_sym(X)
    Z = as_sym(Z)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape != p.C.shape or Z.shape != p.C.shape or y.size != p.b.size:
        raise DimensionMismatch('pair does not match problem of order %d with %d constraints'
                                % (p.dim, p.b.size))
    pres = float(np.max(np.abs(p.b - p.apply(X))))
    dres = float(np.linalg.norm(p.adjoint(y) - p.C - Z))
    pobj = _inner(p.C, X)
    dobj = float(p.b @ y)
    feas_p = pres <= 1e-8 and eig_sym(X)[0][-1] >= -tol.psd_abs
    feas_d = dres <= 1e-8 and eig_sym(Z)[0][-1] >= -tol.psd_abs
    return PairReport(weak_duality_ok=bool(pobj <= dobj + 10 * tol.sdp_gap * (1.0 + abs(pobj))),
                      feasible_primal=bool(feas_p), feasible_dual=bool(feas_d),
                      complementarity_gap=_inner(X, Z), primal_obj=pobj, dual_obj=dobj,
                      primal_residual=pres, dual_residual=dres)


def complementarity_ranks(X, Z, tol=None):
    '''(rank X, rank Z, strictly complementary) for an optimal pair'''
    tol = tol or Tolerances()
    rx = numerical_rank(X, tol)
    rz = numerical_rank(Z, tol)
    return rx, rz, rx + rz == as_sym(X).shape[0]


def dual_nondegenerate(Z, free_pattern, tol=None):
    '''
    Test whether M Z = 0 forces M = 0 over symmetric M supported on a pattern.

    Parameters
    ----------
    Z : (d, d) psd matrix; eigenvalues below rank_rel * max are dropped first
    free_pattern : iterable of (i, j), i < j, the off-diagonal positions M may
        occupy; diagonal and all other positions of M are zero

    Returns
    -------
    Nondegeneracy(nondegenerate, null_dim) where null_dim counts singular
    values of the map M -> M Z at or below null_rel * sigma_max
    '''
    tol = tol or Tolerances()
    Z = truncate_psd(Z, tol)
    pattern = sorted({(min(i, j), max(i, j)) for i, j in free_pattern if i != j})
    if not pattern:
        return Nondegeneracy(True, 0)
    d = Z.shape[0]
    cols = []
    for i, j in pattern:
        BZ = np.zeros((d, d))
        BZ[i, :] = Z[j, :]
        BZ[j, :] = Z[i, :]
        cols.append(BZ.ravel())
    s = scipy.linalg.svd(np.array(cols).T, compute_uv=False)
    if s[0] == 0.0:
        null_dim = len(pattern)
    else:
        null_dim = int(np.sum(s <= tol.null_rel * s[0])) + len(pattern) - s.size
    return Nondegeneracy(null_dim == 0, null_dim)
