from ._stfem import *  # noqa: F401,F403
from ._stfem import __version__  # noqa: F401
