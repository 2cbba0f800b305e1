"""
This module handles the dsa command: P(L_a) under the block race model.
"""
# standard imports
from typing import List

# project imports
from biotbound.commands.command import Command, Row
from biotbound.dsa.race import RaceSpec, race_probability_exact, race_probability_mc


class DsaCommand(Command): # pylint: disable=too-few-public-methods
    """
    One row per fork point; the Monte Carlo columns are filled when `trials` is set.
    """
    name = "dsa"

    def run(self) -> List[Row]:
        self.columns = ["fork_point", "counterfeit_needed", "honest_needed", "exact", "mc_estimate", "mc_stderr"]
        scenario = self._config.get_scenario()
        alpha = self._config.get_float("alpha")
        trials = self._config.get_int("trials", 0)
        rows = []
        for fork_point in range(1, scenario.authentic_length + 1):
            spec = RaceSpec.for_fork(scenario, fork_point, alpha)
            estimate, stderr = None, None
            if trials:
                estimate, stderr = race_probability_mc(spec, trials, self.seed + fork_point, self.threads)
            rows.append([
                fork_point, spec.counterfeit_needed, spec.honest_needed, race_probability_exact(spec), estimate, stderr
            ])
        return rows
