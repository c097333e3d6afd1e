"""Shell completion support for the magpie CLI.

Enable with ``eval "$(register-python-argcomplete magpie.py)"``.
"""

import argparse
from typing import List

from .patch import EditKind

SCENARIO_SUFFIXES = ("cfg",)
PATCH_SUFFIXES = ("txt", "patch")


def families_completer(prefix: str, parsed_args: argparse.Namespace, **kwargs) -> List[str]:
    """Completer for comma-separated ``--families`` values."""
    head, sep, last = prefix.rpartition(",")
    chosen = set(head.split(",")) if head else set()
    return [
        f"{head}{sep}{kind.value}"
        for kind in EditKind
        if kind.value.startswith(last) and kind.value not in chosen
    ]


def install_completers(parser: argparse.ArgumentParser) -> None:
    """Install custom completers and activate argcomplete when it is installed."""
    try:
        import argcomplete
        from argcomplete.completers import FilesCompleter
    except ImportError:
        return

    for action in parser._subparsers._actions:
        if isinstance(action, argparse._SubParsersAction):
            for subparser in action.choices.values():
                for sub_action in subparser._actions:
                    if sub_action.dest == "families":
                        sub_action.completer = families_completer
                    elif sub_action.dest == "scenario":
                        sub_action.completer = FilesCompleter(SCENARIO_SUFFIXES)
                    elif sub_action.dest in ("patch", "patches"):
                        sub_action.completer = FilesCompleter(PATCH_SUFFIXES)

    argcomplete.autocomplete(parser)
