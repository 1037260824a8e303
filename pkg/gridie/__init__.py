"""
gridie: Open Information Extraction with iterative grid labeling.
"""

__version__ = "1.0.0"
