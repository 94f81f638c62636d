"""Multilingual text-to-SQL with contrastive-reward GRPO, built on a small numpy stack.

Modules: ``schema`` and ``dataset`` (data), ``sql`` and ``executor`` (SQL
frontend and interpreter), ``rewards``, ``autodiff``, ``encoder``, ``policy``,
``grpo``, ``evaluation``, ``config`` and ``cli``.
"""

__version__ = "0.1.0"
