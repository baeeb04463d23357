"""Partial actions of finite groups on finite-dimensional C*-algebras and finite spaces.

Enveloping actions, crossed products, Fell bundles, kernel algebras, Morita
envelopes, Takai duality and dilations of partial representations, all checked
numerically with residual reports.
"""

__version__ = "0.1.0"
