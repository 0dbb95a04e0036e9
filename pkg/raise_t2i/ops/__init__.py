"""
Operations: run trace, run store, replay, metrics and trace narratives.

Import the submodules directly; this package re-exports nothing so that the
engine can depend on ``ops.trace`` without pulling in the store.
"""
