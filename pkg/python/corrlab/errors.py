'''Exceptions raised by corrlab.'''


class CorrlabError(Exception):
    '''Base class for all corrlab errors'''


class NumericalFailure(CorrlabError):
    '''Eigen solver or SDP iteration failed to converge'''


class IndefiniteMatrix(CorrlabError):
    pass


class DimensionMismatch(CorrlabError):
    pass


class WrongShape(CorrlabError):
    '''Operation is only defined for a particular correlator shape'''


class OutOfRange(CorrlabError):
    pass


class WrongScenario(CorrlabError):
    '''Analytic description requested outside min(n, m) <= 2'''


class NotAMember(CorrlabError):
    pass


class NotExtremeInput(CorrlabError):
    pass


class TooLarge(CorrlabError):
    pass


class SignalingInput(CorrlabError):
    pass


class InvariantViolation(CorrlabError):
    pass


class UnknownName(CorrlabError):
    pass


class ParseError(CorrlabError):
    pass
