"""
This module handles the probability mass functions over the quantizer alphabet
and the parametric families producing them.
"""
# standard imports
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

# third party imports
import numpy as np
from scipy.stats import norm

# project imports
from biotbound.errors import InvalidParameterError, PartialsUnavailableError

# types
Vector = Union[Sequence[float], np.ndarray]
PmfEvaluator = Callable[[float, np.ndarray], Union["AlphabetPmf", np.ndarray]]

PROB_TOLERANCE = 1e-12
PARTIAL_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class AlphabetPmf():
    """
    A pmf over the alphabet {0, ..., |O|-1}, optionally carrying its partials
    in theta (vector of size |O|) and in xi (matrix |O| x d).
    """
    probs: np.ndarray
    dtheta: Optional[np.ndarray] = None
    dxi: Optional[np.ndarray] = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise InvalidParameterError(f"A pmf must be a non-empty vector, got shape {probs.shape}")
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise InvalidParameterError(f"Probabilities must lie in [0, 1], got {probs.tolist()}")
        if abs(probs.sum() - 1.0) > PROB_TOLERANCE:
            raise InvalidParameterError(f"Probabilities must sum to 1, got {probs.sum()!r}")
        object.__setattr__(self, "probs", probs)

        if self.dtheta is not None:
            dtheta = np.asarray(self.dtheta, dtype=float)
            if dtheta.shape != probs.shape:
                raise InvalidParameterError(f"dtheta has shape {dtheta.shape}, expected {probs.shape}")
            self._check_column_sum(dtheta, "dtheta")
            object.__setattr__(self, "dtheta", dtheta)

        if self.dxi is not None:
            dxi = np.asarray(self.dxi, dtype=float)
            if dxi.ndim == 1:
                dxi = dxi[:, None]
            if dxi.ndim != 2 or dxi.shape[0] != probs.size:
                raise InvalidParameterError(f"dxi has shape {dxi.shape}, expected ({probs.size}, d)")
            for column in range(dxi.shape[1]):
                self._check_column_sum(dxi[:, column], f"dxi[:, {column}]")
            object.__setattr__(self, "dxi", dxi)

    @staticmethod
    def _check_column_sum(column: np.ndarray, name: str):
        scale = max(1.0, float(np.max(np.abs(column))))
        if abs(column.sum()) > PARTIAL_TOLERANCE * scale:
            raise InvalidParameterError(f"{name} must sum to 0, got {column.sum()!r}")

    @property
    def size(self) -> int:
        """
        Returns the alphabet size |O|.
        """
        return self.probs.size

    def require_dtheta(self) -> np.ndarray:
        """
        Returns the partials in theta or raises if the pmf has none.
        """
        if self.dtheta is None:
            raise PartialsUnavailableError("The pmf has no partial derivatives in theta")
        return self.dtheta

    def require_dxi(self, dimension: int) -> np.ndarray:
        """
        Returns the partials in xi or raises if the pmf has none.
        """
        if self.dxi is None:
            raise PartialsUnavailableError("The pmf has no partial derivatives in xi")
        if self.dxi.shape[1] != dimension:
            raise InvalidParameterError(f"dxi has {self.dxi.shape[1]} columns, expected {dimension}")
        return self.dxi


def _one_bit_pmf(mean, threshold: float, noise_std: float) -> Tuple[np.ndarray, np.ndarray]:
    if not noise_std > 0:
        raise InvalidParameterError(f"noise_std must be positive, got {noise_std}")
    z = (threshold - np.asarray(mean, dtype=float)) / noise_std
    probs = np.stack([norm.cdf(z), norm.sf(z)], axis=-1)
    density = norm.pdf(z) / noise_std
    dmean = np.stack([-density, density], axis=-1)
    return probs, dmean


def gaussian_quantizer_pmf(theta: float, threshold: float, noise_std: float) -> AlphabetPmf:
    """
    Pmf of a one-bit quantizer applied to a Gaussian measurement with mean theta.
    Symbol 0 stands for a measurement below or at the threshold.
    """
    probs, dmean = _one_bit_pmf(theta, threshold, noise_std)
    return AlphabetPmf(probs=probs, dtheta=dmean)


def injection_attack_pmf(theta: float, xi: Vector, threshold: float, noise_std: float) -> AlphabetPmf:
    """
    Pmf of a one-bit quantizer applied to a measurement falsified by the injection of xi.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.size != 1:
        raise InvalidParameterError(f"The injection attack has one parameter, got {xi.size}")
    probs, dmean = _one_bit_pmf(theta + xi[0], threshold, noise_std)
    return AlphabetPmf(probs=probs, dtheta=dmean, dxi=dmean[:, None])


def calibrate_threshold(prob_zero: float, mean: float, noise_std: float = 1.0) -> float:
    """
    Returns the one-bit quantizer threshold whose symbol 0 has probability prob_zero
    when the measurement mean is `mean`.
    """
    if not 0.0 < prob_zero < 1.0:
        raise InvalidParameterError(f"prob_zero must lie in (0, 1), got {prob_zero}")
    if not noise_std > 0:
        raise InvalidParameterError(f"noise_std must be positive, got {noise_std}")
    return float(mean + noise_std * norm.ppf(prob_zero))


def _probs_of(value) -> np.ndarray:
    if isinstance(value, AlphabetPmf):
        return value.probs
    return np.asarray(value, dtype=float)


def finite_difference_partials(
    pmf_family: PmfEvaluator,
    theta: float,
    xi: Vector,
    step: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Central-difference partials of a parametric pmf in theta and in each entry of xi.
    """
    if not step > 0:
        raise InvalidParameterError(f"step must be positive, got {step}")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))

    dtheta = (_probs_of(pmf_family(theta + step, xi)) - _probs_of(pmf_family(theta - step, xi))) / (2 * step)
    columns = []
    for k in range(xi.size):
        shift = np.zeros_like(xi)
        shift[k] = step
        columns.append(
            (_probs_of(pmf_family(theta, xi + shift)) - _probs_of(pmf_family(theta, xi - shift))) / (2 * step)
        )
    dxi = np.stack(columns, axis=1) if columns else np.zeros((dtheta.size, 0))
    return dtheta, dxi


class QuantizerFamily():
    """
    Honest data family: one-bit quantizer of a Gaussian measurement with mean theta.
    """
    dimension = 0
    vectorized = True

    def __init__(self, threshold: float, noise_std: float = 1.0):
        if not noise_std > 0:
            raise InvalidParameterError(f"noise_std must be positive, got {noise_std}")
        self.threshold = float(threshold)
        self.noise_std = float(noise_std)

    def probs(self, theta, xi=None) -> np.ndarray: # pylint: disable=unused-argument
        """
        Vectorized probabilities, shape (..., 2) for an array of theta.
        """
        return _one_bit_pmf(theta, self.threshold, self.noise_std)[0]

    def __call__(self, theta: float, xi: Optional[Vector] = None) -> AlphabetPmf:
        return gaussian_quantizer_pmf(theta, self.threshold, self.noise_std)

    def __repr__(self):
        return f"QuantizerFamily(threshold={self.threshold}, noise_std={self.noise_std})"


class InjectionFamily():
    """
    Attack family: the malicious device quantizes its measurement shifted by xi.
    """
    dimension = 1
    vectorized = True

    def __init__(self, threshold: float, noise_std: float = 1.0):
        if not noise_std > 0:
            raise InvalidParameterError(f"noise_std must be positive, got {noise_std}")
        self.threshold = float(threshold)
        self.noise_std = float(noise_std)

    def probs(self, theta, xi) -> np.ndarray:
        """
        Vectorized probabilities, shape (..., 2); xi is broadcast against theta.
        """
        return _one_bit_pmf(np.asarray(theta) + np.asarray(xi), self.threshold, self.noise_std)[0]

    def __call__(self, theta: float, xi: Vector) -> AlphabetPmf:
        return injection_attack_pmf(theta, xi, self.threshold, self.noise_std)

    def __repr__(self):
        return f"InjectionFamily(threshold={self.threshold}, noise_std={self.noise_std})"


class NumericFamily():
    """
    Wraps a user function (theta, xi) -> probabilities and supplies partials
    by central finite differences.
    """
    vectorized = False

    def __init__(self, function: Callable[[float, np.ndarray], np.ndarray], dimension: int, step: float = 1e-6):
        self._function = function
        self.dimension = dimension
        self.step = step

    def probs(self, theta, xi=None) -> np.ndarray:
        """
        Probabilities at a single point; an honest family is called without xi.
        """
        xi = np.zeros(0) if xi is None else np.atleast_1d(np.asarray(xi, dtype=float))
        return np.asarray(self._function(theta, xi), dtype=float)

    def __call__(self, theta: float, xi: Optional[Vector] = None) -> AlphabetPmf:
        xi = np.zeros(0) if xi is None else np.atleast_1d(np.asarray(xi, dtype=float))
        dtheta, dxi = finite_difference_partials(self._function, theta, xi, self.step)
        # the partials of a pmf sum to zero; remove the rounding left by the differences
        dtheta = dtheta - dtheta.mean()
        dxi = dxi - dxi.mean(axis=0) if xi.size else None
        return AlphabetPmf(probs=self.probs(theta, xi), dtheta=dtheta, dxi=dxi)


@dataclass(frozen=True)
class ModelFamily():
    """
    The pair of families describing honest data p(theta) and falsified data g(theta, xi).
    """
    honest: QuantizerFamily
    attack: InjectionFamily
