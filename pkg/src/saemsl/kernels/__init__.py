"""Backend selection for the hot numeric kernels.

``SAEMSL_BACKEND=numpy`` forces the pure-numpy fallback; ``numba`` demands
the compiled backend (raising if numba is unavailable). By default the
numba backend is used when importable, numpy otherwise. Both backends
expose identical functions over pre-drawn RNG arrays, so a fixed seed
yields the same results (up to last-ulp libm differences) either way.
"""

from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

_REQUESTED = os.environ.get("SAEMSL_BACKEND", "").strip().lower()

if _REQUESTED == "numpy":
    from . import numpy_backend as backend
elif _REQUESTED == "numba":
    from . import numba_backend as backend
elif _REQUESTED in ("", "auto"):
    try:
        from . import numba_backend as backend
    except ImportError:  # pragma: no cover - depends on environment
        logger.warning("numba unavailable, falling back to numpy kernels")
        from . import numpy_backend as backend
else:
    raise RuntimeError(
        f"SAEMSL_BACKEND={_REQUESTED!r} not recognized (use 'numba' or 'numpy')"
    )

BACKEND_NAME = backend.NAME

nlg_paths = backend.nlg_paths
nlg_step = backend.nlg_step
series_summaries6 = backend.series_summaries6
theo_paths = backend.theo_paths
theo_segment = backend.theo_segment
interp_rows = backend.interp_rows
sigma_qv_rows = backend.sigma_qv_rows
theo_latent_summaries = backend.theo_latent_summaries
theo_obs_summaries = backend.theo_obs_summaries
gk_quantile = backend.gk_quantile
gk_raw_summaries = backend.gk_raw_summaries
