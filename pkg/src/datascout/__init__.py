"""datascout: a self-contained dataset search engine.

Profiles tabular datasets into compact summaries, indexes them in-process,
answers keyword/temporal/spatial/join/union discovery queries, and
materializes join/union augmentations.
"""

__version__ = "0.1.0"
