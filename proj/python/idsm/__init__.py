from ._idsm import *  # noqa: F401,F403
