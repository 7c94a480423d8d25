"""Models module for torch network definitions."""
