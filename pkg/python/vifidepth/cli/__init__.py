"""Command-line surface: ``vifidepth <subcommand>``."""
