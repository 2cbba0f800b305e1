"""
This module handles the config file.
"""
# standard imports
import copy
import json
from importlib import resources
from json import JSONDecodeError
from numbers import Real
from typing import Any, Dict, List, Optional

# third party imports
import numpy as np
from loguru import logger

# project imports
from biotbound.dsa.race import success_profile
from biotbound.errors import ConfigError
from biotbound.model.pmf import (
    AlphabetPmf,
    InjectionFamily,
    ModelFamily,
    QuantizerFamily,
    calibrate_threshold,
)
from biotbound.model.scenario import AttackSpec, Scenario
from biotbound.relax.relax import SensitivityTable

MANIFEST_KEY = "manifest"


def _is_number(value: Any) -> bool:
    return isinstance(value, Real) and not isinstance(value, bool)


def _is_numeric_tree(value: Any) -> bool:
    if isinstance(value, list):
        return all(_is_numeric_tree(item) for item in value)
    return _is_number(value)


def numeric_array(key: str, value: Any) -> np.ndarray:
    """
    Converts a number or nested list of numbers to a float array; raises ConfigError otherwise.
    """
    if not _is_numeric_tree(value):
        raise ConfigError(f"{key} must hold numbers only, got {value!r}")
    try:
        return np.array(value, dtype=float)
    except ValueError as error:
        raise ConfigError(f"{key} is not a regular array: {error}") from error


class Config():
    """
    This class implements methods to read a scenario config and build the model objects.
    """
    def __init__(self, values: Optional[Dict[str, Any]] = None):
        self._config: Dict[str, Any] = dict(values or {})

    def parse(self, config_path: str):
        """
        This method parses the config file and loads it in the class.
        A run manifest is accepted too: its resolved config section is loaded.
        """
        try:
            with open(config_path, "r", encoding="utf-8") as file_fp:
                data = json.load(file_fp)
        except (OSError, JSONDecodeError) as error:
            raise ConfigError(f"Could not read {config_path}: {error}") from error
        self.load(data)
        logger.debug(f"Config loaded from {config_path}")

    def load(self, data: Any):
        """
        This method loads an already decoded config.
        """
        if not isinstance(data, dict):
            raise ConfigError("The config must be a JSON object")
        if MANIFEST_KEY in data:
            data = data.get("config")
            if not isinstance(data, dict):
                raise ConfigError("The manifest has no config section")
        self._config = data

    @classmethod
    def from_fixture(cls, name: str) -> "Config":
        """
        This method loads one of the configs shipped in biotbound/config/fixtures.
        """
        path = resources.files("biotbound.config").joinpath("fixtures", f"{name}.json")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, JSONDecodeError) as error:
            raise ConfigError(f"Unknown or malformed fixture {name}: {error}") from error
        config = cls()
        config.load(data)
        return config

    def copy(self) -> "Config":
        """
        Returns an independent copy.
        """
        return Config(copy.deepcopy(self._config))

    def set(self, key: str, value: Any):
        """
        Overrides a key, for command line flags.
        """
        self._config[key] = value

    def has(self, key: str) -> bool:
        """
        Tells whether a key is set.
        """
        return self._config.get(key) is not None

    def as_dict(self) -> Dict[str, Any]:
        """
        Returns the config without the comment keys.
        """
        return {key: value for key, value in self._config.items() if not key.startswith("$")}

    def get(self, key: str, default: Any = None) -> Any:
        """
        Returns a raw value.
        """
        value = self._config.get(key)
        return default if value is None else value

    def _require(self, key: str) -> Any:
        if self._config.get(key) is None:
            raise ConfigError(f"Missing config key {key}")
        return self._config[key]

    def get_int(self, key: str, default: Optional[int] = None) -> int:
        """
        Returns an integer value.
        """
        value = self._require(key) if default is None else self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return value

    def get_float(self, key: str, default: Optional[float] = None) -> float:
        """
        Returns a real value.
        """
        value = self._require(key) if default is None else self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, Real):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        return float(value)

    def get_vector(self, key: str) -> np.ndarray:
        """
        Returns a vector of reals; a scalar is read as a vector of size one.
        """
        value = self._require(key)
        if _is_number(value):
            value = [value]
        if not isinstance(value, list) or not all(_is_number(item) for item in value):
            raise ConfigError(f"{key} must be a list of numbers, got {value!r}")
        return np.array(value, dtype=float)

    def get_ids(self, key: str) -> List[int]:
        """
        Returns a list of device ids.
        """
        value = self.get(key, [])
        if not isinstance(value, list) or not all(
            isinstance(item, int) and not isinstance(item, bool) for item in value
        ):
            raise ConfigError(f"{key} must be a list of device ids, got {value!r}")
        return value

    def get_counts(self, key: str, default: List[int]) -> List[int]:
        """
        Returns a list of positive integers.
        """
        value = self.get(key, default)
        if not isinstance(value, list) or not all(
            isinstance(item, int) and not isinstance(item, bool) and item > 0 for item in value
        ):
            raise ConfigError(f"{key} must be a list of positive integers, got {value!r}")
        return value

    def get_scenario(self) -> Scenario:
        """
        Builds the network geometry.
        """
        honest = self.get_ids("honest")
        malicious = self.get_ids("malicious")
        return Scenario(
            n_devices=self.get_int("n_devices", len(honest) + len(malicious)),
            honest=tuple(honest),
            malicious=tuple(malicious),
            chain_length=self.get_int("chain_length"),
            authentic_length=self.get_int("authentic_length"),
            alphabet_size=self.get_int("alphabet_size", 2),
            theta=self.get_float("theta", 0.0),
        )

    def get_honest_family(self) -> Optional[QuantizerFamily]:
        """
        Returns the one-bit quantizer family of honest data, from `threshold` or calibrated
        on a binary `honest_pmf`; None when the honest pmf is tabulated with its partials.
        """
        noise_std = self.get_float("noise_std", 1.0)
        if self.has("threshold"):
            return QuantizerFamily(self.get_float("threshold"), noise_std)
        if self.has("honest_pmf_dtheta") or not self.has("honest_pmf"):
            return None
        probs = self.get_vector("honest_pmf")
        if probs.size != 2:
            return None
        threshold = calibrate_threshold(probs[0], self.get_float("theta", 0.0), noise_std)
        logger.info(f"Honest quantizer threshold calibrated to {threshold!r}")
        return QuantizerFamily(threshold, noise_std)

    def get_attack_family(self) -> Optional[InjectionFamily]:
        """
        Returns the injection family, from `attack_threshold`, calibrated on a binary
        `attack_pmf` at theta + xi, or sharing the honest threshold.
        None when the attack pmf is tabulated with its partials.
        """
        noise_std = self.get_float("noise_std", 1.0)
        if self.has("attack_threshold"):
            return InjectionFamily(self.get_float("attack_threshold"), noise_std)
        if self.has("attack_pmf_dtheta") or self.has("attack_pmf_dxi"):
            return None
        if self.has("attack_pmf"):
            probs = self.get_vector("attack_pmf")
            if probs.size != 2:
                return None
            mean = self.get_float("theta", 0.0) + float(self.get_vector("xi")[0])
            threshold = calibrate_threshold(probs[0], mean, noise_std)
            logger.info(f"Attack quantizer threshold calibrated to {threshold!r}")
            return InjectionFamily(threshold, noise_std)
        honest = self.get_honest_family()
        return None if honest is None else InjectionFamily(honest.threshold, noise_std)

    def get_model_family(self) -> ModelFamily:
        """
        Returns both families; required by the simulation harness.
        """
        honest, attack = self.get_honest_family(), self.get_attack_family()
        if honest is None or attack is None:
            raise ConfigError("A parametric model is required: set threshold/attack_threshold or binary pmfs")
        return ModelFamily(honest=honest, attack=attack)

    def get_honest_pmf(self) -> AlphabetPmf:
        """
        Returns p at theta.
        """
        family = self.get_honest_family()
        if family is not None:
            return family(self.get_float("theta", 0.0))
        if not self.has("honest_pmf"):
            raise ConfigError("Set either threshold or honest_pmf")
        return AlphabetPmf(self.get_vector("honest_pmf"), dtheta=self.get_vector("honest_pmf_dtheta"))

    def get_attack_pmf(self, xi: Optional[np.ndarray] = None) -> AlphabetPmf:
        """
        Returns the attack pmf at (theta, xi).
        """
        xi = self.get_vector("xi") if xi is None else np.atleast_1d(xi)
        family = self.get_attack_family()
        if family is not None:
            return family(self.get_float("theta", 0.0), xi)
        if not self.has("attack_pmf"):
            raise ConfigError("Set either attack_threshold or attack_pmf")
        dxi = numeric_array("attack_pmf_dxi", self._require("attack_pmf_dxi"))
        return AlphabetPmf(self.get_vector("attack_pmf"), dtheta=self.get_vector("attack_pmf_dtheta"), dxi=dxi)

    def get_dsa_profile(self, scenario: Scenario) -> np.ndarray:
        """
        Returns P(L_a) for L_a = 1..L0: the `dsa_prob` row as given, else the race model at `alpha`.
        """
        if self.has("dsa_prob"):
            row = self.get_vector("dsa_prob")
            if row.size != scenario.authentic_length:
                raise ConfigError(f"dsa_prob must have {scenario.authentic_length} entries, got {row.size}")
            return row
        if self.has("alpha"):
            return success_profile(scenario, self.get_float("alpha"))
        raise ConfigError("Set either dsa_prob or alpha")

    def get_dsa_rows(self) -> Dict[int, np.ndarray]:
        """
        Returns the P(L_a) rows indexed by chain length.
        """
        rows = self.get("dsa_prob_rows", {})
        if not isinstance(rows, dict):
            raise ConfigError("dsa_prob_rows must map chain lengths to rows")
        parsed = {}
        for length, row in rows.items():
            try:
                chain_length = int(length)
            except ValueError as error:
                raise ConfigError(f"dsa_prob_rows key {length!r} is not a chain length") from error
            parsed[chain_length] = numeric_array(f"dsa_prob_rows[{length}]", row)
        return parsed

    def get_attack(self, fork_point: Optional[int] = None, xi: Optional[np.ndarray] = None) -> AttackSpec:
        """
        Builds the attack of the config, or of the given fork point and xi.
        """
        scenario = self.get_scenario()
        fork_point = self.get_int("fork_point") if fork_point is None else fork_point
        xi = self.get_vector("xi") if xi is None else np.atleast_1d(xi)
        profile = self.get_dsa_profile(scenario)
        if not 1 <= fork_point <= profile.size:
            raise ConfigError(f"fork_point {fork_point} is outside of 1..{profile.size}")
        return AttackSpec(
            fork_point=fork_point,
            xi=xi,
            dsa_prob=float(profile[fork_point - 1]),
            attack_pmf=self.get_attack_pmf(xi),
        )

    def get_sensitivity_table(self) -> Optional[SensitivityTable]:
        """
        Returns the tabulated X and w, if the config carries one.
        """
        table = self.get("sensitivity_table")
        if table is None:
            return None
        if not isinstance(table, dict) or "x" not in table or "w" not in table:
            raise ConfigError("sensitivity_table must hold x and w")
        x = numeric_array("sensitivity_table.x", table["x"])
        w = numeric_array("sensitivity_table.w", table["w"])
        if x.shape != w.shape or x.ndim != 1:
            raise ConfigError("sensitivity_table x and w must be vectors of the same size")
        if np.any(x < 0) or np.any(w < 0):
            raise ConfigError("sensitivity_table entries must be nonnegative")
        active = w > 0
        return SensitivityTable(
            x=x[active],
            w=w[active],
            omega=x[active] / w[active],
            index=np.flatnonzero(active),
            outcome_count=np.ones(int(active.sum())),
            malicious_patterns=1,
            dropped=int((~active).sum()),
        )
