"""Integral by subset simulation and nested-domain replay, moments by LIN-ESS"""
