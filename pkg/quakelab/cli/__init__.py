from quakelab.cli.commands import COMMANDS

__all__ = ["COMMANDS"]
