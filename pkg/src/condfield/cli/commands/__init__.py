"""One module per pipeline stage; each exposes ``register(subparsers, common)``."""

from condfield.cli.commands import coil, compare, conductor, field, net, phantom

COMMANDS = [
    phantom.register,
    conductor.register,
    net.register,
    coil.register,
    field.register,
    compare.register,
]

__all__ = ["COMMANDS"]
