"""Plain-text and CSV rendering for shotsort results."""
