"""
This module contains the base class for the commands.
"""
# standard imports
from typing import Any, Dict, List, Optional

# project imports
from biotbound.attackopt.attackopt import OptOptions
from biotbound.config.config import Config
from biotbound.outcome.outcome import DEFAULT_CAP

# types
Row = List[Any]


class Command():
    """
    This class is the base class for all the commands. A command reads the config,
    runs one stage of the pipeline and returns CSV rows matching `columns`.
    """
    name = "N/A"

    def __init__(self, config: Config, arguments: Optional[Dict[str, Any]] = None):
        self._config = config
        self._arguments = arguments or {}
        self.columns: List[str] = []

    @property
    def seed(self) -> int:
        """
        Returns the seed of the run.
        """
        return self._config.get_int("seed", 0)

    @property
    def threads(self) -> int:
        """
        Returns the number of worker threads.
        """
        return self._config.get_int("threads", 1)

    @property
    def cap(self) -> int:
        """
        Returns the outcome-space cap.
        """
        return self._config.get_int("cap", DEFAULT_CAP)

    @property
    def method(self) -> str:
        """
        Returns the summation method: auto, enumerate or collapsed.
        """
        return self._config.get("method", "auto")

    def opt_options(self) -> OptOptions:
        """
        Returns the attack optimizer options of the config.
        """
        return OptOptions(
            starts=self._config.get_int("starts", 16),
            max_iter=self._config.get_int("max_iter", 500),
            seed=self.seed,
            threads=self.threads,
            method=self.method,
            cap=self.cap,
        )

    def run(self) -> List[Row]:
        """
        This method runs the command and returns its rows.
        """
        raise NotImplementedError()
