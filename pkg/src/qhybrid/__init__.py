"""Hybrid quantum-classical machine learning toolkit.

Three-stage pipeline on MNIST-style digit data: an autoencoder compresses
784-pixel images into 64 latent features, a 5-qubit statevector circuit
turns latent blocks into measurement-probability features, and a dense
network with batch norm and dropout classifies the result. Everything is
deterministic under a single 64-bit seed.
"""

__version__ = "0.1.0"
