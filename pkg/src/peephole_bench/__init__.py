"""Evaluation harness for LLM-driven AArch64 peephole optimization."""

__version__ = "0.1.0"
