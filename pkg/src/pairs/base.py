# src/pairs/base.py
import logging
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import ParameterError

logger = logging.getLogger(__name__)

States = Dict[str, np.ndarray]
MAX_EPSILON = 0.5


class PairModel(BaseModel):
    """An exchangeable pair (X, X') or family (X, X_eps) with its linearity constant.

    Subclasses draw a batch of states (always carrying ``x``), then any number
    of independent increments X' - X from each state.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: str = ""
    description: str = ""
    k: int = Field(ge=1, description="Dimension of X (complex dimension for complex models).")
    n: int = Field(ge=1, description="Ambient size: number of summands, or the matrix/vector dimension.")
    sigma2: float = Field(default=1.0, gt=0.0, description="Per real coordinate variance of the Gaussian target.")
    continuous: bool = False
    complex_valued: bool = False
    chunk_size: int = 5_000
    supports_inner_draws: bool = True

    def lambda_of(self, epsilon: Optional[float] = None) -> float:
        """lambda = 1/n for the discrete pair, lambda(eps) = eps^2 / n for the continuous ones."""
        if self.continuous:
            self.check_epsilon(epsilon)
            return epsilon ** 2 / self.n
        return 1.0 / self.n

    def check_epsilon(self, epsilon: Optional[float]) -> None:
        if not self.continuous:
            if epsilon is not None:
                raise ParameterError(f"The {self.kind} pair is discrete and takes no epsilon")
            return
        if epsilon is None:
            raise ParameterError(f"The {self.kind} pair is continuous; epsilon is required")
        if not 0.0 < epsilon <= MAX_EPSILON:
            raise ParameterError(f"epsilon must lie in (0, 1/2], got {epsilon}")

    def draw_states(self, rng: np.random.Generator, size: int, epsilon: Optional[float] = None) -> States:
        raise NotImplementedError

    def increment_pair(
        self, states: States, rng: np.random.Generator, epsilon: Optional[float] = None
    ) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """X' - X for one fresh inner draw per state; continuous models also return the -eps partner."""
        raise NotImplementedError

    def analytic_matrices(self, states: States) -> Optional[Dict[str, np.ndarray]]:
        """Per-sample E (discrete), F, or Gamma/Lambda/F (complex); None when no closed form exists."""
        return None

    def sample_pairs(
        self, rng: np.random.Generator, size: int, epsilon: Optional[float] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        self.check_epsilon(epsilon)
        states = self.draw_states(rng, size, epsilon)
        delta, _ = self.increment_pair(states, rng, epsilon)
        return states["x"], states["x"] + delta

    def describe(self) -> Dict[str, object]:
        return {"kind": self.kind, "k": self.k, "n": self.n, "sigma2": self.sigma2, "continuous": self.continuous}
