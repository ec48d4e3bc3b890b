"""Feature modules"""

__all__ = ['gaussian', 'mvn_cdf', 'rejection', 'liness', 'gessner', 'semi_analytic', 'harness']
