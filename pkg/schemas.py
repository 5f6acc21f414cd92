"""
pydantic schemas for every JSON input the lab reads
"""
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator

Pair = List[float]


def _cx(pair):
    return complex(pair[0], pair[1])


class MatrixIn(BaseModel):
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    data: List[Pair]

    @field_validator("data")
    @classmethod
    def pairs_are_finite(cls, v):
        for p in v:
            if len(p) != 2 or not all(np.isfinite(p)):
                raise ValueError("entries must be finite [re, im] pairs")
        return v

    @model_validator(mode="after")
    def length_matches(self):
        if len(self.data) != self.rows * self.cols:
            raise ValueError(
                f"data has {len(self.data)} entries, expected rows*cols={self.rows * self.cols}"
            )
        return self

    def to_array(self):
        flat = np.array([_cx(p) for p in self.data], dtype=complex)
        return flat.reshape(self.rows, self.cols)


class WeightRule(BaseModel):
    kind: Literal["constant", "periodic"] = "constant"
    value: Pair = [1.0, 0.0]
    values: List[Pair] = []

    @model_validator(mode="after")
    def periodic_needs_values(self):
        if self.kind == "periodic" and not self.values:
            raise ValueError("periodic weights need a nonempty values list")
        return self


class EigenRule(BaseModel):
    kind: Literal["points", "disc_net"] = "points"
    values: List[Pair] = []
    center: Pair = [0.0, 0.0]
    radius: float = Field(default=1.0, gt=0)
    spacing: float = Field(default=0.1, gt=0)

    @model_validator(mode="after")
    def points_nonempty(self):
        if self.kind == "points" and not self.values:
            raise ValueError("points rule needs a nonempty values list")
        return self


class UnilateralShiftIn(BaseModel):
    variant: Literal["unilateral_shift"]
    direction: Literal["fwd", "bwd"]
    weights: WeightRule = WeightRule()


class BilateralShiftIn(BaseModel):
    variant: Literal["bilateral_shift"]
    s: Pair = [1.0, 0.0]


class AnalyticToeplitzIn(BaseModel):
    variant: Literal["analytic_toeplitz"]
    symbol: List[Pair] = Field(min_length=1)
    adjoint: bool = False


class DiagonalNormalIn(BaseModel):
    variant: Literal["diagonal_normal"]
    eigenvalues: EigenRule


class DirectSumIn(BaseModel):
    variant: Literal["direct_sum"]
    children: List["ModelIn"] = Field(min_length=1)


ModelIn = Union[UnilateralShiftIn, BilateralShiftIn, AnalyticToeplitzIn, DiagonalNormalIn, DirectSumIn]
DirectSumIn.model_rebuild()


MODEL_ADAPTER = TypeAdapter(Annotated[ModelIn, Field(discriminator="variant")])


class DomainIn(BaseModel):
    kind: Literal["disc", "ellipse", "custom"]
    center: Pair = [0.0, 0.0]
    radius: Optional[float] = Field(default=None, gt=0)
    a: Optional[float] = Field(default=None, gt=0)
    b: Optional[float] = Field(default=None, gt=0)
    samples: List[Pair] = []
    conjugate: bool = False

    @model_validator(mode="after")
    def kind_fields(self):
        if self.kind == "disc" and self.radius is None:
            raise ValueError("disc needs radius")
        if self.kind == "ellipse" and (self.a is None or self.b is None):
            raise ValueError("ellipse needs a and b")
        if self.kind == "custom" and len(self.samples) < 16:
            raise ValueError("custom domain needs at least 16 boundary samples")
        return self


class ProblemIn(BaseModel):
    domains: List[DomainIn] = Field(min_length=2)
    eps1: float = Field(gt=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str
    inputs: List[str] = []
    output_dir: str = "out"
    grid: Optional[str] = None
    seed: int = Field(default=0x5EED, ge=0, lt=2**64)
    formats: List[Literal["csv", "json", "svg"]] = ["csv", "json", "svg"]
    threads: int = Field(default=1, ge=1)
    options: dict = {}
