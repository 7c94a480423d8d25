"""Synth module for procedural identities, illuminations and datasets."""
