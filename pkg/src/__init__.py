"""
stg - integral, mean and covariance of simplex-truncated multivariate normals
"""

__version__ = "0.1.0"
