"""Flux reconstruction with volume-penalization immersed boundaries: spectral and time-domain analysis."""
