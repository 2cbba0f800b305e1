"""
This module handles the crb command: CRB on theta for the configured attack.
"""
# standard imports
from typing import List

# third party imports
from loguru import logger

# project imports
from biotbound.commands.command import Command, Row
from biotbound.fisher.fisher import crb_report
from biotbound.model.scenario import check_honest_pmf, validate_scenario


class CrbCommand(Command): # pylint: disable=too-few-public-methods
    """
    Runs the Fisher pipeline for one (L_a, xi).
    """
    name = "crb"

    def run(self) -> List[Row]:
        self.columns = ["crb_theta", "bound", "schur_gap", "alignment_residual"]
        scenario = self._config.get_scenario()
        scenario, attack = validate_scenario(scenario, self._config.get_attack())
        p = check_honest_pmf(scenario, self._config.get_honest_pmf())
        _, report = crb_report(scenario, attack, p, method=self.method, cap=self.cap)
        logger.info(f"CRB_theta = {report.crb_theta!r}, 1/J_C0 = {report.bound!r}")
        return [[report.crb_theta, report.bound, report.schur_gap, report.alignment_residual]]
