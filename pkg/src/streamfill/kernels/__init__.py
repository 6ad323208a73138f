"""Hot loops, each with a numba and a numpy implementation.

The public name in each module (``cd_gram``, ``grow_tree``, ...) is bound to
whichever implementation :mod:`streamfill._accel` selects; the ``*_numba`` and
``*_numpy`` twins stay importable for parity tests and benchmarks.
"""
