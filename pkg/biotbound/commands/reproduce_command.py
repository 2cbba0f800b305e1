"""
This module handles the reproduce command: sweeps of the adversary's optimal CRB
and of the relaxation guarantee over chain length, honest device count, or the
honest/malicious split of a fixed network.
"""
# standard imports
from dataclasses import replace
from typing import List, Tuple

# third party imports
import numpy as np
from joblib import Parallel, delayed
from loguru import logger

# project imports
from biotbound.attackopt.attackopt import OptOptions, maximize_crb
from biotbound.commands.command import Command, Row
from biotbound.errors import ConfigError, OutcomeSpaceTooLargeError
from biotbound.model.scenario import Scenario, make_scenario
from biotbound.relax.relax import guarantee_bound

SWEEPS = ("chain_length", "honest_devices", "network_split")
SWEEP_ALIASES = {"fig2": "chain_length", "fig3": "honest_devices", "fig4": "network_split"}
SWEEP_CHOICES = SWEEPS + tuple(SWEEP_ALIASES)
COLUMNS = ["sweep_var", "optimal_value_30", "reciprocal_optimal_48", "status", "reason"]
DEFAULT_HONEST_COUNTS = [1, 2, 3, 4, 5]
DEFAULT_NETWORK_SIZE = 6

# types
SweepPoint = Tuple[int, Scenario, np.ndarray]


class ReproduceCommand(Command):
    """
    One row per sweep point, in sweep order. Points beyond the outcome cap are
    reported as skipped.
    """
    name = "reproduce"

    def _points(self, sweep: str) -> List[SweepPoint]:
        config = self._config
        theta = config.get_float("theta", 0.0)
        honest_count = len(config.get_ids("honest"))
        malicious_count = len(config.get_ids("malicious"))
        chain_length = config.get_int("chain_length")
        authentic_length = config.get_int("authentic_length")

        if sweep == "chain_length":
            rows = config.get_dsa_rows()
            if not rows:
                raise ConfigError("The chain_length sweep needs dsa_prob_rows")
            return [
                (length, make_scenario(honest_count, malicious_count, length, authentic_length, theta), rows[length])
                for length in sorted(rows)
            ]

        honest_counts = config.get_counts("sweep_values", DEFAULT_HONEST_COUNTS)
        if sweep == "honest_devices":
            scenarios = [
                (count, make_scenario(count, malicious_count, chain_length, authentic_length, theta))
                for count in honest_counts
            ]
        else:
            size = config.get_int("sweep_devices", DEFAULT_NETWORK_SIZE)
            scenarios = [
                (count, make_scenario(count, size - count, chain_length, authentic_length, theta))
                for count in honest_counts
            ]
        return [(value, scenario, config.get_dsa_profile(scenario)) for value, scenario in scenarios]

    def _evaluate(self, point: SweepPoint, options: OptOptions) -> Row:
        value, scenario, row = point
        honest_pmf = self._config.get_honest_pmf()
        try:
            result = maximize_crb(scenario, honest_pmf, self._config.get_attack_family(), row, options)
            guarantee = guarantee_bound(scenario, honest_pmf, row, method=self.method, cap=self.cap)
        except OutcomeSpaceTooLargeError as error:
            logger.warning(f"Sweep point {value} skipped: {error}")
            return [value, None, None, "skipped", str(error)]
        logger.debug(f"Sweep point {value}: max CRB {result.best_crb!r}, guarantee {guarantee!r}")
        return [value, result.best_crb, guarantee, "ok", ""]

    def run(self) -> List[Row]:
        sweep = self._arguments.get("sweep")
        sweep = SWEEP_ALIASES.get(sweep, sweep)
        if sweep not in SWEEPS:
            raise ConfigError(f"Unknown sweep {sweep}, expected one of {', '.join(SWEEP_CHOICES)}")
        if self._config.get_attack_family() is None:
            raise ConfigError("reproduce needs a parametric attack family")
        self.columns = list(COLUMNS)
        points = self._points(sweep)
        options = replace(self.opt_options(), threads=1)
        rows = Parallel(n_jobs=self.threads, prefer="threads")(
            delayed(self._evaluate)(point, options) for point in points
        )
        logger.info(f"Sweep {sweep} done over {len(rows)} points")
        return rows
