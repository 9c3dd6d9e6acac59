"""Likelihood-free parameter estimation toolkit.

Implements stochastic-approximation EM driven by synthetic likelihoods
(Gaussian likelihoods on user-defined summary statistics of the joint
observed/latent processes), alongside the baselines it is compared with:
SAEM with a bootstrap particle filter, direct optimization of the data
synthetic likelihood, pseudo-marginal synthetic-likelihood MCMC, and
ABC-MCMC with a MAD-calibrated Gaussian kernel.
"""

__version__ = "0.1.0"
