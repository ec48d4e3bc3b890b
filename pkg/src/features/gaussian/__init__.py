"""Multivariate normal parameters, factorization, density and sampling"""
