"""Hot loops, compiled when possible.

The Cython module is used if it was built; otherwise the numpy version is
loaded. Set ``RELSEC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

python_backend = _pykernels
compiled_backend = None

if os.environ.get("RELSEC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend or python_backend
BACKEND = backend.NAME

rate_grid = backend.rate_grid
cond_typicality = backend.cond_typicality
