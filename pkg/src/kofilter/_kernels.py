"""Kernel selection: compiled extension if available, numpy fallback otherwise.

Set ``KOFILTER_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by tests that compare the two implementations).
"""

import os

from . import _cd_py

if os.environ.get("KOFILTER_PURE_PYTHON"):
    _impl = _cd_py
    USING_COMPILED = False
else:
    try:
        from . import _cd_fast as _impl

        USING_COMPILED = True
    except ImportError:
        _impl = _cd_py
        USING_COMPILED = False

cd_gram_sweeps = _impl.cd_gram_sweeps
