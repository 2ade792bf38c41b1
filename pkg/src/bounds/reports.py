# src/bounds/reports.py
import json
from typing import Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

Provenance = Literal["analytic", "monte-carlo", "user"]
Theorem = Literal["discrete", "cont", "cont_complex", "complex", "basic", "ksphere", "mix", "uthm"]


class BoundInput(BaseModel):
    value: Union[float, List[List[float]]] = Field(description="Scalar input, or a matrix as nested rows.")
    provenance: Provenance = Field(default="user", description="Where the number came from.")
    se: Optional[float] = Field(default=None, ge=0.0, description="Standard error for monte-carlo inputs.")

    @classmethod
    def of(cls, value, provenance: Provenance = "user", se: Optional[float] = None) -> "BoundInput":
        if isinstance(value, np.ndarray):
            value = np.real_if_close(value).astype(float).tolist()
        elif not isinstance(value, list):
            value = float(value)
        return cls(value=value, provenance=provenance, se=se)


class BoundReport(BaseModel):
    """One evaluated error bound with the named inputs it was computed from."""
    theorem: Theorem
    inputs: Dict[str, BoundInput]
    value: float = Field(ge=0.0)
    formula_text: str
    se: Optional[float] = Field(default=None, ge=0.0, description="Monte Carlo SE propagated from the inputs.")
    notes: List[str] = Field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BoundReport":
        return cls.model_validate_json(text)
