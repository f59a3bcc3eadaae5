"""L1-penalized least absolute deviation regression for sparse high-dimensional models."""
