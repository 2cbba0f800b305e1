"""
This module handles the maximize command: the adversary's best fork point and xi.
"""
# standard imports
from typing import List

# project imports
from biotbound.attackopt.attackopt import maximize_crb
from biotbound.commands.command import Command, Row
from biotbound.errors import ConfigError


class MaximizeCommand(Command): # pylint: disable=too-few-public-methods
    """
    One row per fork point, the best one flagged.
    """
    name = "maximize"

    def run(self) -> List[Row]:
        scenario = self._config.get_scenario()
        family = self._config.get_attack_family()
        if family is None:
            raise ConfigError("maximize needs a parametric attack family (attack_threshold or a binary attack_pmf)")
        result = maximize_crb(
            scenario,
            self._config.get_honest_pmf(),
            family,
            self._config.get_dsa_profile(scenario),
            self.opt_options(),
        )
        xi_columns = ["xi"] if family.dimension == 1 else [f"xi_{k + 1}" for k in range(family.dimension)]
        self.columns = ["fork_point", "crb_theta"] + xi_columns + ["best", "no_op_attack"]
        return [
            [value.fork_point, value.crb] + value.xi.tolist()
            + [value.fork_point == result.best_fork, result.no_op_attack]
            for value in result.per_fork_values
        ]
