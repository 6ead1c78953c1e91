"""
Command-line package for sift-bench
"""
