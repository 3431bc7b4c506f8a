"""Utility modules for shotsort."""
