"""Deterministic moments by inclusion-exclusion over half-space intersections"""
