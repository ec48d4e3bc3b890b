"""Hyperrectangle probabilities of multivariate normals"""
