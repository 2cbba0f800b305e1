"""
This module handles the command executions.
"""
# standard imports
from importlib import import_module
from typing import Any, Dict, List, Optional, Tuple

# third party imports
from loguru import logger

# project imports
from biotbound.commands.command import Command, Row
from biotbound.config.config import Config
from biotbound.errors import ConfigError


class Executor(): # pylint: disable=too-few-public-methods
    """
    This class loads a command by name and runs it.
    """
    def __init__(self, config: Config):
        self._config = config

    def execute(self, command_name: str, arguments: Optional[Dict[str, Any]] = None) -> Tuple[List[str], List[Row]]:
        """
        This method runs a command and returns its columns and rows.
        """
        command_path = f"{command_name}_command"
        command_class_name = f"{command_name.title()}Command"

        try:
            module = import_module("biotbound.commands." + command_path)
        except ImportError as error:
            logger.error(f"[!] Could not find module {command_path}")
            raise ConfigError(f"Unknown command {command_name}") from error

        command_instance: Command = getattr(module, command_class_name)(self._config, arguments)
        logger.debug(f"Running {command_class_name}")
        rows = command_instance.run()
        return command_instance.columns, rows
