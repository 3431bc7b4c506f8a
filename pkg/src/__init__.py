"""Few-shot multi-channel spike sorting toolkit."""
