"""Commands module for CLI subcommand handlers."""
