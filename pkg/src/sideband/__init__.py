"""Laser cooling and motional sideband spectra of a trapped two-level atom.

The package works in units where hbar = 1 and the natural linewidth
gamma = 1.  Positions are measured in units of the ground-state width of
the trap, so the recoil coupling is ``eta * X``.

Modules:

* ``basis``: motional eigenbases (square well, Morse, harmonic, numeric).
* ``internal``: driven two-level Liouvillian and its correlation functions.
* ``cooling``: transition rates, rate-equation steady state, cooling curves.
* ``spectrum``: perturbative sideband peaks and spectra.
* ``oracle``: brute-force master equation used to validate the above.
* ``presets`` and ``cli``: run configurations and the command-line tool.
"""

from .basis import *  # noqa: F401,F403
from .cooling import *  # noqa: F401,F403
from .internal import *  # noqa: F401,F403
from .spectrum import *  # noqa: F401,F403
from . import basis, cooling, internal, oracle, presets, spectrum  # noqa: F401

__version__ = "0.1.0"
