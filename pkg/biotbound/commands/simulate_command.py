"""
This module handles the simulate command: MSE of the MLE against the CRB.
"""
# standard imports
from typing import List

# project imports
from biotbound.commands.command import Command, Row
from biotbound.model.scenario import validate_scenario
from biotbound.simharness.simharness import mse_experiment


class SimulateCommand(Command): # pylint: disable=too-few-public-methods
    """
    Runs `trials` estimates from `chains` chains each.
    """
    name = "simulate"

    def run(self) -> List[Row]:
        self.columns = ["trials", "chains", "theta_mse", "xi_mse", "crb_theta", "ratio", "ratio_stderr"]
        scenario, attack = validate_scenario(self._config.get_scenario(), self._config.get_attack())
        report = mse_experiment(
            scenario,
            attack,
            self._config.get_model_family(),
            trials=self._config.get_int("trials", 20),
            seed=self.seed,
            chains=self._config.get_int("chains", 50),
            threads=self.threads,
            method=self.method,
            cap=self.cap,
        )
        return [[
            report.trials,
            report.chains,
            report.theta_mse,
            report.xi_mse,
            report.crb_theta,
            report.ratio,
            report.ratio_stderr,
        ]]
