"""Data ingestion, model fitting/serialization, simulation models and the benchmark harness."""
