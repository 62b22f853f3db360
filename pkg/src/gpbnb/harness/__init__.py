"""Experiment configuration, execution, metrics and output."""
