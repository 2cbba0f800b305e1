"""
This module handles the bound command: 1/J_C0 and the relaxation guarantee.
"""
# standard imports
from typing import List

# project imports
from biotbound.commands.command import Command, Row
from biotbound.relax.relax import sensitivity_weights, waterfill


class BoundCommand(Command): # pylint: disable=too-few-public-methods
    """
    Both bounds only need the honest data model.
    """
    name = "bound"

    def run(self) -> List[Row]:
        self.columns = ["j_c0", "bound", "guarantee"]
        scenario = self._config.get_scenario()
        table = sensitivity_weights(scenario, self._config.get_honest_pmf(), method=self.method, cap=self.cap)
        j_c0 = table.honest_information()
        return [[j_c0, 1.0 / j_c0, waterfill(table).guarantee]]
