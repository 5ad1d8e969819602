from ctxpress.cli.commands import ablate, compress, run, sensitivity, sweep

COMMANDS = (compress, run, sweep, ablate, sensitivity)


def register_commands(subparsers) -> None:
    # Include all command modules
    for command in COMMANDS:
        command.register(subparsers)
