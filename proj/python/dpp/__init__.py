"""Python access to the dpp core: CLI commands, text metrics, grammar and executor."""

from dpp._core import (
    ConfigError,
    LoadError,
    bleu,
    execute,
    grammar_pairs,
    load_config,
    run_cli,
    version,
    wmd,
)

__all__ = [
    "ConfigError",
    "LoadError",
    "bleu",
    "execute",
    "grammar_pairs",
    "load_config",
    "run_cli",
    "version",
    "wmd",
]
