"""Master-equation hierarchy for open quantum systems coupled to finite
spin baths: measured volumes, dissipation rates, the extended
microcanonical master equation and its Born-Markov-secular reductions with
a self-consistent nonequilibrium temperature.

The compiled extension carries the implementation; this package only
re-exports it so both the installed-wheel and the build-tree layouts work.
"""

try:
    from ._finitebath import *  # noqa: F401,F403  (wheel layout)
    from ._finitebath import __version__  # noqa: F401
except ImportError:  # build tree: extension on PYTHONPATH next to us
    from _finitebath import *  # noqa: F401,F403
    from _finitebath import __version__  # noqa: F401
