"""
This module handles the waterfill command.
"""
# standard imports
from typing import List

# third party imports
from loguru import logger

# project imports
from biotbound.commands.command import Command, Row
from biotbound.relax.relax import kkt_residuals, sensitivity_weights, waterfill


class WaterfillCommand(Command): # pylint: disable=too-few-public-methods
    """
    Solves the relaxed problem on the tabulated sensitivity table of the config,
    or on the one of the configured scenario.
    """
    name = "waterfill"

    def run(self) -> List[Row]:
        self.columns = ["lambda_star", "objective", "guarantee", "s1_size", "s2_size", "s3_size", "kkt_residual"]
        table = self._config.get_sensitivity_table()
        if table is None:
            table = sensitivity_weights(
                self._config.get_scenario(), self._config.get_honest_pmf(), method=self.method, cap=self.cap
            )
        solution = waterfill(table)
        residual = kkt_residuals(table, solution).worst()
        logger.info(f"Water level {solution.lambda_star!r}, objective {solution.objective!r}")
        return [[
            solution.lambda_star,
            solution.objective,
            solution.guarantee,
            solution.s1.size,
            solution.s2.size,
            solution.s3.size,
            residual,
        ]]
