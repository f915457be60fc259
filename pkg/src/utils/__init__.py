"""
Shared helpers for the CLR toolkit.

The exception hierarchy used to classify fit failures, and scoped control
of numpy floating-point warnings inside the EM loops.
"""
