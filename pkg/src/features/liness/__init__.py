"""Analytic elliptical slice sampling under linear constraints"""
