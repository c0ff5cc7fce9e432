"""Synthetic-scene laboratory for extracting and shaping latent 3D scene topology.

Modules
-------
scene_gen   scenes, camera trajectories, spatial QA and counterfactuals
coverage    per-patch object coverage from analytic silhouettes
emulator    planted latent model of object tokens
spectral    kernel graphs, Dirichlet energies and spectral verification harnesses
extraction  nuisance bases, residualisation, PCA, Procrustes and RSA
probes      ridge / kNN probes, steering and counterfactual flip rates
trainer     Dirichlet-ratio regularised toy training and sample-complexity study
reports     CSV and SVG writers
cli         the ``scenetopo`` command
"""
__version__ = "0.1.0"
