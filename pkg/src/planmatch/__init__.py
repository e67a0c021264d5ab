"""Climate-plan mining toolkit.

Ingests page-delimited municipal climate plans, runs a retrieval-augmented
screening / extraction / theme-evaluation workflow against a pluggable
language-model provider, computes corpus topic analytics, and serves
content-based peer-city recommendations over the resulting binary
city-by-item matrices.
"""

__version__ = "0.1.0"
