"""Incremental rule compiler: conditions become relational terms, terms are
differentiated per update event, and the derivatives drive if-write demons
over a world-stacked object store."""

__version__ = "0.1.0"
