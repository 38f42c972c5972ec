"""Test suite for the private labour-market insights pipeline.

All tests run offline on synthetic data.
"""
