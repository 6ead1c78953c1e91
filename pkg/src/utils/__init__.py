"""
Utils package for sift-bench
"""
