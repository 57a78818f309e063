"""Selects the compiled core if available, the numpy fallback otherwise.

Set ``SGS_FORCE_NUMPY=1`` to force the fallback (used by the benchmark and
for debugging). The two backends implement identical arithmetic; results
agree to round-off.
"""

import os

from . import _core_numpy

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and not os.environ.get("SGS_FORCE_NUMPY"):
    _active = _compiled
else:
    _active = _core_numpy

HAVE_COMPILED = _compiled is not None

trilinear = _active.trilinear
phase_apply = _active.phase_apply


def backend_name():
    return _active.NAME
