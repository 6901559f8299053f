"""Contextual entity disambiguation toolkit.

Thin wrapper over the C++ module: a word+entity transformer encoder trained
with masked entity prediction and decoded locally or sequentially
(natural/confidence order).
"""

try:
    from ._edkit import *  # noqa: F401,F403  (installed package layout)
except ImportError:  # build-tree layout: extension sits on PYTHONPATH
    from _edkit import *  # noqa: F401,F403
