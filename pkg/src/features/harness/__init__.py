"""Experiment protocol: parameter sampling, multi-method comparison and reports"""
