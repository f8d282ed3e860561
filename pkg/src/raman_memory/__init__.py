"""Raman quantum memory.

Numerical model of single-photon storage and retrieval in a Raman-coupled atomic ensemble:
the Bessel-kernel memory modes, a unitary propagator for the Maxwell-Bloch equations,
control-pulse modematching, readout efficiency maps and the transverse mode structure.
"""

__version__ = "0.1.0"
