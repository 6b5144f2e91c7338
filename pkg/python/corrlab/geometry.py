'''
Decision procedures on the set of quantum correlators.

Membership (angle inequalities for min(n, m) <= 2, completion SDP in
general), extremality (uniqueness of the completion plus the Hadamard rank
condition, with strict complementarity as the fallback), exposedness (dual
nondegeneracy over every off-diagonal position), locality (convex hull of
deterministic points as an LP) and the singlet self-test classification of
rank-2 two-setting correlators.
'''

__license__ = "GPL"
__version__ = "1.0.0"
__status__ = "Production"

import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import linprog

from .completion import (as_correlator, angles, chordal_membership_2x2, find_completion,
                         normalize_diag, offdiagonal_pattern, project, require_2x2)
from .errors import (NotAMember, NotExtremeInput, NumericalFailure, TooLarge,
                     WrongScenario)
from .linalg import Tolerances, as_sym, gram_factor, singular_rank
from .sdp import OPTIMAL, SdpProblem, SdpSolver, dual_nondegenerate

logger = logging.getLogger(__name__)

EXTREME = 'Extreme'
NOT_EXTREME = 'NotExtreme'
INCONCLUSIVE = 'Inconclusive'
EXPOSED = 'Exposed'
UNKNOWN = 'Unknown'

# largest n + m for which deterministic strategies are enumerated
LOCAL_ENUMERATION_LIMIT = 20


@dataclass
class CycleConstraint:
    '''
    One side of a four-cycle inequality on the angles of a 2 x k correlator.

    The cycle runs through rows ``rows`` and columns ``cols`` (indices into
    the correlator as given); ``subtracted`` is the entry whose angle enters
    with a minus sign. ``side`` is ``lower`` (0 <= sum) or ``upper``
    (sum <= 2 pi); ``slack`` is negative when violated.
    '''
    rows: tuple
    cols: tuple
    subtracted: tuple
    side: str
    slack: float

    def describe(self):
        rel = '0 <=' if self.side == 'lower' else '<= 2pi'
        return ('cycle rows %s cols %s minus theta%s (%s) slack %.6g'
                % (self.rows, self.cols, self.subtracted, rel, self.slack))


@dataclass
class AnalyticMembership:
    member: bool
    violated: List[CycleConstraint] = field(default_factory=list)
    tight: List[CycleConstraint] = field(default_factory=list)


@dataclass
class MembershipVerdict:
    member: bool
    margin: float
    boundary: bool
    evidence: object = None


@dataclass
class ExtremalityVerdict:
    status: str
    reason: str
    evidence: object
    strict_complementarity: bool

    @property
    def extreme(self):
        return self.status == EXTREME


@dataclass
class AnalyticExtremality:
    extreme: bool
    tight_cycles: int
    tight_boxes: int
    rank: int


@dataclass
class ExposednessVerdict:
    '''
    ``hyperplane`` is the coefficient matrix L of the supporting inequality
    sum L_xy c_xy <= offset, read off the completion dual as L = -lam_xy,
    offset = sum lam_i.
    '''
    status: str
    hyperplane: Optional[np.ndarray]
    offset: Optional[float]
    lam_i: Optional[np.ndarray]
    lam_xy: Optional[np.ndarray]
    null_dim: int
    extremality: ExtremalityVerdict = None

    @property
    def exposed(self):
        return self.status == EXPOSED


@dataclass
class SupportValue:
    value: float
    argmax: np.ndarray
    solution: object = None


@dataclass
class LocalityVerdict:
    local: bool
    weights: Optional[np.ndarray] = None
    strategies: Optional[np.ndarray] = None


def _oriented(C):
    '''orient C so that its rows are the party with at most two settings'''
    n, m = C.shape
    if min(n, m) > 2:
        raise WrongScenario('angle description needs min(n, m) <= 2, got %d x %d' % (n, m))
    if n > 2:
        return C.T, True
    return C, False


def cycle_constraints(C):
    '''
    Every four-cycle inequality of C with its slack.

    Parameters
    ----------
    C : (n, m) correlator with min(n, m) <= 2

    Returns
    -------
    list of CycleConstraint, eight per pair of columns of the two-setting
    party; empty when that party has a single setting
    '''
    C = as_correlator(C)
    D, flipped = _oriented(C)
    if D.shape[0] < 2:
        return []
    th = np.arccos(D)
    out = []
    for i, j in itertools.combinations(range(D.shape[1]), 2):
        cyc = [(0, i), (0, j), (1, i), (1, j)]
        total = sum(th[e] for e in cyc)
        for e in cyc:
            v = total - 2 * th[e]
            rows, cols, sub = (0, 1), (i, j), e
            if flipped:
                rows, cols, sub = (i, j), (0, 1), (e[1], e[0])
            out.append(CycleConstraint(rows, cols, sub, 'lower', float(v)))
            out.append(CycleConstraint(rows, cols, sub, 'upper', float(2 * np.pi - v)))
    return out


def membership_analytic(C, tol=None):
    '''
    Membership from the four-cycle angle inequalities.

    Box constraints 0 <= theta <= pi hold by construction of the angles.
    '''
    tol = tol or Tolerances()
    cons = cycle_constraints(C)
    violated = [c for c in cons if c.slack < -tol.tight_abs]
    tight = [c for c in cons if abs(c.slack) <= tol.tight_abs]
    return AnalyticMembership(member=not violated, violated=violated, tight=tight)


def membership_sdp(C, tol=None):
    '''membership with the signed margin of the completion problem'''
    res = find_completion(C, tol)
    return MembershipVerdict(member=res.member, margin=res.margin, boundary=res.boundary,
                             evidence=res)


def extremality_from_completion(res, tol=None):
    '''
    Classify a member from its completion result.

    Unique completion: extreme iff rank(X o X) = r (r + 1) / 2 with r = rank X.
    Otherwise strict complementarity of the returned pair proves a second
    completion exists, so the point is not extreme; failing that the test
    is inconclusive.
    '''
    if not res.member:
        raise NotAMember('margin %.3e below -psd_abs' % res.margin)
    strict = res.strict_complementarity
    if res.unique:
        r = res.rank_completion
        if res.rank_hadamard == r * (r + 1) // 2:
            return ExtremalityVerdict(EXTREME, 'UniqueCompletionRankOk', res, strict)
        return ExtremalityVerdict(NOT_EXTREME, 'RankConditionFailed', res, strict)
    if strict:
        return ExtremalityVerdict(NOT_EXTREME, 'NonUniqueStrictComp', res, strict)
    logger.warning('extremality inconclusive: rank X %d rank Z %d order %d null dim %d',
                   res.rank_completion, res.rank_dual, res.n + res.m, res.null_dim)
    return ExtremalityVerdict(INCONCLUSIVE, 'DegenerateNoStrictComp', res, strict)


def is_extreme(C, tol=None):
    '''
    Decide whether C is an extreme point of the correlator set.

    Parameters
    ----------
    C : (n, m) correlator, must be a member
    tol : Tolerances

    Returns
    -------
    ExtremalityVerdict with the CompletionResult as evidence
    '''
    return extremality_from_completion(find_completion(C, tol), tol)


def is_extreme_analytic_2x2(C, tol=None):
    '''
    Extremality of a 2 x 2 member from its angles.

    Rank one: extreme iff every |c| = 1. Rank two: extreme iff exactly one
    cycle bound is tight and at most one box bound is.
    '''
    tol = tol or Tolerances()
    C = require_2x2(C)
    if not chordal_membership_2x2(C, tol):
        raise NotAMember('2 x 2 correlator violates a cycle inequality')
    rank = singular_rank(C, tol)
    th = angles(C)
    tight_boxes = int(np.sum(th <= tol.tight_abs) + np.sum(th >= np.pi - tol.tight_abs))
    tight_cycles = len(membership_analytic(C, tol).tight)
    if rank <= 1:
        extreme = bool(np.all(np.abs(1.0 - np.abs(C)) <= tol.tight_abs))
    else:
        extreme = tight_cycles == 1 and tight_boxes <= 1
    return AnalyticExtremality(extreme, tight_cycles, tight_boxes, rank)


def is_exposed(C, tol=None, extremality=None):
    '''
    Sufficient test for exposedness of an extreme point.

    Parameters
    ----------
    C : (n, m) correlator
    tol : Tolerances
    extremality : optional ExtremalityVerdict already computed for C

    Returns
    -------
    ExposednessVerdict; Exposed when M Z = 0 has only the trivial symmetric
    solution with zero diagonal, Unknown otherwise
    '''
    tol = tol or Tolerances()
    verdict = extremality or is_extreme(C, tol)
    if verdict.status != EXTREME:
        raise NotExtremeInput('exposedness needs an extreme point, got %s' % verdict.status)
    res = verdict.evidence
    nd = dual_nondegenerate(res.dual_certificate, offdiagonal_pattern(res.n + res.m), tol)
    status = EXPOSED if nd.nondegenerate else UNKNOWN
    if not nd.nondegenerate:
        logger.info('exposedness unknown: null dim %d', nd.null_dim)
    return ExposednessVerdict(status=status, hyperplane=-res.lam_xy,
                              offset=float(res.lam_i.sum()), lam_i=res.lam_i,
                              lam_xy=res.lam_xy, null_dim=nd.null_dim, extremality=verdict)


def normalized_hyperplane(hyperplane, offset):
    '''scale a supporting inequality so the largest coefficient modulus is one'''
    L = np.asarray(hyperplane, dtype=float)
    s = np.max(np.abs(L))
    if s == 0:
        return L.copy(), float(offset)
    return L / s, float(offset) / s


def hyperplane_key(hyperplane, offset, tol=None):
    '''
    Comparison form of a hyperplane: normalized_hyperplane, then negated if
    needed so the first coefficient above tight_abs is positive.

    The negation reverses the inequality, so the key identifies the
    hyperplane only and is not a supporting inequality itself.
    '''
    tol = tol or Tolerances()
    L, offset = normalized_hyperplane(hyperplane, offset)
    nz = np.flatnonzero(np.abs(L) > tol.tight_abs)
    if nz.size and L.flat[nz[0]] < 0:
        return -L, -offset
    return L, offset


def hyperplane_value(L, C):
    return float(np.sum(np.asarray(L, dtype=float) * np.asarray(C, dtype=float)))


def support_value(L, tol=None):
    '''
    Maximum of sum L_xy c_xy over all quantum correlators.

    Solved in lifted form: max <L_b, X> over unit-diagonal psd X of order
    n + m, L_b = [[0, L/2], [L^T/2, 0]].

    Returns
    -------
    SupportValue(value, argmax) with argmax the off-diagonal block of the
    optimal X
    '''
    tol = tol or Tolerances()
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if not np.all(np.isfinite(L)):
        raise ValueError('functional must be finite')
    n, m = L.shape
    d = n + m
    Lb = np.zeros((d, d))
    Lb[:n, n:] = 0.5 * L
    Lb[n:, :n] = 0.5 * L.T
    A = np.zeros((d, d, d))
    A[np.arange(d), np.arange(d), np.arange(d)] = 1.0
    sol = SdpSolver(tol).solve(SdpProblem(Lb, A, np.ones(d)))
    if sol.status != OPTIMAL:
        raise NumericalFailure('support SDP ended with status %s' % sol.status)
    return SupportValue(value=sol.primal_obj, argmax=project(normalize_diag(sol.X), n),
                        solution=sol)


def deterministic_correlators(n, m):
    '''the 2^(n+m-1) distinct points x y^T with x[0] = +1'''
    out = []
    for xs in itertools.product((1.0, -1.0), repeat=n - 1):
        x = np.r_[1.0, xs]
        for y in itertools.product((1.0, -1.0), repeat=m):
            out.append(np.outer(x, y))
    return np.array(out)


def is_local(C, tol=None):
    '''
    Membership in the convex hull of deterministic correlators, as an LP.

    Returns
    -------
    LocalityVerdict with convex weights over ``strategies`` when local
    '''
    C = as_correlator(C)
    n, m = C.shape
    if n + m > LOCAL_ENUMERATION_LIMIT:
        raise TooLarge('n + m = %d exceeds the enumeration limit %d'
                       % (n + m, LOCAL_ENUMERATION_LIMIT))
    D = deterministic_correlators(n, m)
    k = D.shape[0]
    A_eq = np.vstack([D.reshape(k, -1).T, np.ones((1, k))])
    b_eq = np.r_[C.ravel(), 1.0]
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method='highs')
    if res.status == 2:
        return LocalityVerdict(local=False)
    if res.status != 0:
        raise NumericalFailure('locality LP failed: %s' % res.message)
    return LocalityVerdict(local=True, weights=res.x, strategies=D)


def self_tests_singlet_2x2(C, tol=None, extremality=None):
    '''rank-2 extreme points of the 2 x 2 correlator set are exactly the singlet self-tests'''
    tol = tol or Tolerances()
    C = require_2x2(C)
    if singular_rank(C, tol) != 2:
        return False
    verdict = extremality or is_extreme(C, tol)
    return verdict.status == EXTREME


def gram_system(C, tol=None):
    '''
    Unit vectors realising an extreme correlator.

    Returns
    -------
    (U, V) with rows u_x (first party) and v_y (second party) such that
    u_x . v_y = c[x, y], living in dimension rank of the completion
    '''
    tol = tol or Tolerances()
    verdict = is_extreme(C, tol)
    if verdict.status != EXTREME:
        raise NotExtremeInput('C-systems are read off extreme points, got %s' % verdict.status)
    res = verdict.evidence
    G = gram_factor(as_sym(res.completion), tol)
    return G[:res.n], G[res.n:]
