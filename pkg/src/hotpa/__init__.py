"""hotpa: femtosecond two-photon photoassociation of hot atom pairs.

Thermal random-phase wavefunction ensembles, non-perturbative
multichannel pulse propagation with a Chebyshev expansion, and
purity/coherence observables of the photoassociated molecules.
"""

__version__ = "0.1.0"
