"""Utils module for configuration, errors, checkpoints, image I/O and reports."""
