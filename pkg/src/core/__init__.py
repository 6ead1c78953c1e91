"""
Core package for sift-bench
"""
