"""Hot inner loops: tree split search and elastic-net coordinate descent.

The compiled extension is used when it is importable; otherwise the numpy
fallback is loaded. Set ``FRAMESEL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("FRAMESEL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

gbt_level_split = _impl.gbt_level_split
gbt_boost = _impl.gbt_boost
ensemble_predict = _impl.ensemble_predict
gbt_grow_tree = _impl.gbt_grow_tree
cart_level_split_gini = _impl.cart_level_split_gini
cart_level_split_mse = _impl.cart_level_split_mse
enet_cd = _impl.enet_cd

__all__ = [
    "BACKEND",
    "gbt_level_split",
    "gbt_boost",
    "ensemble_predict",
    "gbt_grow_tree",
    "cart_level_split_gini",
    "cart_level_split_mse",
    "enet_cd",
]
