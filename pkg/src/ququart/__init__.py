"""Two-qubit emulation on a four-level qudit.

Subpackages by capability: ``core`` (states, native gates, channels,
sampling), ``compiler`` (two-qubit lowering, virtual-Z propagation,
Clifford groups), ``noise`` (decay dynamics, damping channels,
misclassification, reset), ``readout`` (IQ synthesis, mixture
classification, assignment mitigation), ``rb`` and ``gst``
(characterization), ``vqe`` (hydrogen ground-state search), ``h2``
(coefficient-table generation), and the batch front ends ``config``,
``experiments``, ``plots``, ``cli``.
"""

__version__ = "0.1.0"
