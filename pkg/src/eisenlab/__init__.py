"""eisenlab: desk-scale numerics for fourth moments of newform Eisenstein series.

Subpackages cover Dirichlet characters and Gauss sums, special functions
(complex log-Gamma, imaginary-order Bessel K, the de Branges-Wilson
Beta-product integral), Dirichlet L-functions via Hurwitz zeta, Eisenstein
Fourier expansions with a lattice-sum cross-check, Gamma_0(N) coset geometry
and hyperbolic quadrature, the shifted-moment recipe pipeline, and the
truncated-moment Mellin/residue pipeline.
"""

__version__ = "0.1.0"
