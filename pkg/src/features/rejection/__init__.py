"""Naive rejection estimator"""
