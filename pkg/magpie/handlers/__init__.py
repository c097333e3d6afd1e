"""Subcommand handlers: frame the output and call into the core modules."""
