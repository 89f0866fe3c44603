"""
Mean curvature motion of graphs with a constant contact angle at a free boundary.
"""
