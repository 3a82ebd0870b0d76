"""Numerical kernels for analytic symbol calculus.

Subpackages cover truncated Taylor jets over expression trees, formal
homogeneous symbols with the Moyal algebra and factorial norms, Ehrenpreis
cutoffs and Borel summation, quantitative Gaussian stationary phase, an
FFT-based quantization oracle, the exact Szego kernel on the cylinder,
the FBI transform with wavefront probes, and the transport recursion of the
quantum normal form.
"""

__version__ = "0.1.0"
