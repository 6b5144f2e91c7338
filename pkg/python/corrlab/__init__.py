'''
corrlab: membership, extremality, exposedness, locality and self-testing
of two-party quantum correlators through PSD completion SDPs.
'''

__license__ = "GPL"
__version__ = "1.0.0"
__status__ = "Production"

from .errors import CorrlabError
from .linalg import Tolerances
from .completion import find_completion, angles
from .geometry import (is_exposed, is_extreme, is_local, membership_analytic, membership_sdp,
                       self_tests_singlet_2x2, support_value)
from .models import named, random_extremal_2x2
