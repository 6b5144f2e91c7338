'''
Physics-side objects and the maps down to correlators.

Outcome index 0 stands for +1 and index 1 for -1 throughout, so a behavior
table has shape (n, m, 2, 2) indexed p[x, y, a, b].
'''

__license__ = "GPL"
__version__ = "1.0.0"
__status__ = "Production"

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from .completion import as_correlator
from .errors import DimensionMismatch, InvariantViolation, SignalingInput, UnknownName
from .linalg import Tolerances, as_herm

logger = logging.getLogger(__name__)

SIGNS = np.array([1.0, -1.0])

PAULI = {
    'x': np.array([[0, 1], [1, 0]], dtype=complex),
    'y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'z': np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass
class Behavior:
    '''
    Full behavior p(a, b | x, y) of a two-party, two-outcome scenario.

    Parameters
    ----------
    p : (n, m, 2, 2) array, p[x, y, a, b]
    '''
    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.p.ndim != 4 or self.p.shape[2:] != (2, 2):
            raise DimensionMismatch('behavior table must have shape (n, m, 2, 2), got %s'
                                    % (self.p.shape,))
        if np.any(self.p < -1e-10):
            raise InvariantViolation('negative probability %.3g' % self.p.min())
        total = self.p.sum(axis=(2, 3))
        if np.max(np.abs(total - 1.0)) > 1e-10:
            raise InvariantViolation('probabilities do not sum to one for every setting pair')

    @property
    def n(self):
        return self.p.shape[0]

    @property
    def m(self):
        return self.p.shape[1]


@dataclass
class Realization:
    '''
    Quantum state and +-1 observables of a two-party experiment.

    Parameters
    ----------
    state : (dA dB, dA dB) density matrix
    observablesA : list of (dA, dA) Hermitian matrices, spectrum in [-1, 1]
    observablesB : list of (dB, dB) Hermitian matrices, spectrum in [-1, 1]
    '''
    state: np.ndarray
    observablesA: List[np.ndarray]
    observablesB: List[np.ndarray]

    def __post_init__(self):
        self.state = as_herm(self.state)
        self.observablesA = [as_herm(A) for A in self.observablesA]
        self.observablesB = [as_herm(B) for B in self.observablesB]
        if not self.observablesA or not self.observablesB:
            raise DimensionMismatch('each party needs at least one observable')
        dA = self.observablesA[0].shape[0]
        dB = self.observablesB[0].shape[0]
        if (any(A.shape != (dA, dA) for A in self.observablesA)
                or any(B.shape != (dB, dB) for B in self.observablesB)
                or self.state.shape != (dA * dB, dA * dB)):
            raise DimensionMismatch('state of order %d does not match local dimensions %d x %d'
                                    % (self.state.shape[0], dA, dB))
        w = np.linalg.eigvalsh(self.state)
        if w[0] < -1e-10 or abs(np.trace(self.state).real - 1.0) > 1e-10:
            raise InvariantViolation('state is not a density matrix (min eig %.3g, trace %.12g)'
                                     % (w[0], np.trace(self.state).real))
        for O in self.observablesA + self.observablesB:
            w = np.linalg.eigvalsh(O)
            if w[0] < -1.0 - 1e-9 or w[-1] > 1.0 + 1e-9:
                raise InvariantViolation('observable spectrum %s leaves [-1, 1]' % w)

    @property
    def dimA(self):
        return self.observablesA[0].shape[0]

    @property
    def dimB(self):
        return self.observablesB[0].shape[0]


def behavior_to_correlator(b):
    '''
    Marginal and joint correlators of a no-signaling behavior.

    Returns
    -------
    (c_x, c_y, C) with c_x[x] = sum_a a p_A(a|x), c_y[y] likewise and
    C[x, y] = sum_ab a b p(a, b|x, y)
    '''
    p = b.p
    cA = np.einsum('xyab,a->xy', p, SIGNS)
    cB = np.einsum('xyab,b->xy', p, SIGNS)
    if (np.max(cA.max(axis=1) - cA.min(axis=1)) > 1e-8
            or np.max(cB.max(axis=0) - cB.min(axis=0)) > 1e-8):
        raise SignalingInput('marginals depend on the remote setting')
    C = np.einsum('xyab,a,b->xy', p, SIGNS, SIGNS)
    return cA[:, 0], cB[0, :], C


def correlator_to_behavior(c_x, c_y, C):
    '''inverse of behavior_to_correlator: p = (1 + a c_x + b c_y + a b c_xy) / 4'''
    C = as_correlator(C)
    c_x = np.asarray(c_x, dtype=float).reshape(-1)
    c_y = np.asarray(c_y, dtype=float).reshape(-1)
    if c_x.size != C.shape[0] or c_y.size != C.shape[1]:
        raise DimensionMismatch('marginals do not match correlator shape %s' % (C.shape,))
    p = (1.0 + SIGNS[None, None, :, None] * c_x[:, None, None, None]
         + SIGNS[None, None, None, :] * c_y[None, :, None, None]
         + np.multiply.outer(C, np.outer(SIGNS, SIGNS))) / 4.0
    return Behavior(p)


def _expectation(rho, O):
    v = np.trace(rho @ O)
    if abs(v.imag) > 1e-10:
        raise InvariantViolation('expectation value has imaginary part %.3g' % v.imag)
    return v.real


def realization_to_correlator(r):
    '''c[x, y] = Re tr(rho A_x (x) B_y)'''
    return np.array([[_expectation(r.state, np.kron(A, B)) for B in r.observablesB]
                     for A in r.observablesA])


def realization_to_behavior(r):
    '''p(a, b|x, y) = tr(rho M^x_a (x) M^y_b) with M^x_a = (I + a A_x) / 2'''
    IA = np.eye(r.dimA)
    IB = np.eye(r.dimB)
    p = np.zeros((len(r.observablesA), len(r.observablesB), 2, 2))
    for x, A in enumerate(r.observablesA):
        for y, B in enumerate(r.observablesB):
            for i, a in enumerate(SIGNS):
                for j, b in enumerate(SIGNS):
                    p[x, y, i, j] = _expectation(r.state, np.kron((IA + a * A) / 2, (IB + b * B) / 2))
    return Behavior(p)


def projective_observable(direction):
    '''qubit observable n.sigma for the unit vector along ``direction``'''
    v = np.asarray(direction, dtype=float)
    if v.shape != (3,) or not np.any(v):
        raise ValueError('need a nonzero Bloch vector of length 3')
    v = v / np.linalg.norm(v)
    return v[0] * PAULI['x'] + v[1] * PAULI['y'] + v[2] * PAULI['z']


def singlet():
    '''density matrix of (|01> - |10>) / sqrt(2)'''
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return np.outer(psi, psi.conj())


def chsh_realization():
    '''
    Singlet with A = (sigma_z, sigma_x) and B = -(sigma_z +- sigma_x)/sqrt(2).

    The sign on B relabels the second party's outcomes, turning the singlet's
    anti-correlations into the CHSH correlator.
    '''
    return Realization(singlet(),
                       [PAULI['z'], PAULI['x']],
                       [-projective_observable((1, 0, 1)), -projective_observable((-1, 0, 1))])


def switch(C, rows=None, cols=None):
    '''negate rows and columns: diag(rows) C diag(cols) with +-1 sign vectors'''
    C = as_correlator(C)
    r = np.ones(C.shape[0]) if rows is None else np.asarray(rows, dtype=float)
    c = np.ones(C.shape[1]) if cols is None else np.asarray(cols, dtype=float)
    if r.shape != (C.shape[0],) or c.shape != (C.shape[1],) or np.any(np.abs(r) != 1) \
            or np.any(np.abs(c) != 1):
        raise DimensionMismatch('switching needs +-1 vectors matching %s' % (C.shape,))
    return r[:, None] * C * c[None, :]


def extremal_from_angles(theta1, theta2, theta3, tol=None):
    '''
    Extremal 2 x 2 correlator built from three angles, or None.

    The fourth angle is phi = theta1 + theta2 + theta3; the draw is kept when
    phi < pi or 2 pi < phi < 3 pi (each bound kept tight_abs away) and the
    correlator is cos([[theta1, theta2], [theta3, phi]]).
    '''
    tol = tol or Tolerances()
    phi = theta1 + theta2 + theta3
    eps = tol.tight_abs
    if phi < np.pi - eps or 2 * np.pi + eps < phi < 3 * np.pi - eps:
        return np.cos(np.array([[theta1, theta2], [theta3, phi]]))
    return None


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_extremal_2x2(seed, tol=None, with_angles=False):
    '''
    Draw an extremal 2 x 2 correlator by rejection sampling.

    Parameters
    ----------
    seed : int or numpy Generator (PCG64); a Generator is advanced in place
    tol : Tolerances, tight_abs sets the exclusion band around pi, 2 pi, 3 pi
    with_angles : also return the three accepted angles

    Returns
    -------
    C, or (C, thetas) when with_angles is set
    '''
    rng = _rng(seed)
    while True:
        th = rng.uniform(0.0, np.pi, 3)
        C = extremal_from_angles(th[0], th[1], th[2], tol)
        if C is not None:
            return (C, th) if with_angles else C
        logger.debug('rejected draw with angle sum %.6f', th.sum())


def random_extremal_stream(seed, count, tol=None):
    '''``count`` draws from one seeded stream, as (C, thetas) pairs'''
    rng = _rng(seed)
    return [random_extremal_2x2(rng, tol, with_angles=True) for _ in range(count)]


_A = 1.0 / np.sqrt(2.0)

NAMED = {
    'chsh': _A * np.array([[1.0, 1.0], [1.0, -1.0]]),
    'mayers_yao': np.array([[1.0, 0.0, _A], [0.0, 1.0, _A], [_A, _A, 1.0]]),
    'tilted_example3': 0.5 * np.array([[1.0, 1.0], [1.0, -2.0]]),
    'pr_box': np.array([[1.0, 1.0], [1.0, -1.0]]),
}


def named(name, x=None, y=None):
    '''
    Stored reference correlators.

    ``deterministic`` needs the sign vectors x and y and returns x y^T.
    '''
    if name == 'deterministic':
        if x is None or y is None:
            raise UnknownName('deterministic needs sign vectors x and y')
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(np.abs(x) != 1) or np.any(np.abs(y) != 1):
            raise UnknownName('deterministic sign vectors must be +-1')
        return np.outer(x, y)
    try:
        return NAMED[name].copy()
    except KeyError:
        raise UnknownName('unknown instance %r (choose from %s, deterministic)'
                          % (name, ', '.join(sorted(NAMED))))
