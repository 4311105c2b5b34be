from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

import networkx as nx
from mpmath import mpf
from pydantic import BaseModel, Field, root_validator, validator


class GraphFamily(str, Enum):
    """The two self-similar families: Tower of Hanoi graphs H_n and the Sierpinski variant X_n."""
    HANOI = "hanoi"
    SIERPX = "sierpx"

    @property
    def vertex_over_edge_limit(self) -> Fraction:
        if self is GraphFamily.HANOI:
            return Fraction(2, 3)
        return Fraction(7, 15)


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


class GraphInstance(BaseModel):
    """Explicit graph with canonical labels and its three marked outmost vertices."""
    family: GraphFamily
    stage: int = Field(..., ge=0)
    vertices: List[str]
    edges: List[Tuple[str, str]]
    outmost: Tuple[str, str, str]

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.edges)
        return graph


class GraphFamilyMeta(BaseModel):
    family: GraphFamily
    stage: int = Field(..., ge=0)
    vertex_count: int
    edge_count: int
    vertex_over_edge_limit: Fraction

    class Config:
        arbitrary_types_allowed = True


class BoundaryCountVector(BaseModel):
    """Matching counts by how many outmost vertices are dimer-covered (0, 1, 2, 3)."""
    x: int = Field(..., ge=0)
    y: int = Field(..., ge=0)
    z: int = Field(..., ge=0)
    w: int = Field(..., ge=0)
    source: str = ""

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return self.x, self.y, self.z, self.w

    def total(self) -> int:
        return self.x + 3 * self.y + 3 * self.z + self.w

    def scaled(self, factor: int) -> "BoundaryCountVector":
        return BoundaryCountVector(
            x=self.x * factor, y=self.y * factor, z=self.z * factor, w=self.w * factor,
            source=self.source,
        )

    def is_strictly_ordered(self) -> bool:
        return self.x > self.y > self.z > self.w > 0


class AggregateCounts(BaseModel):
    """S, R, T, P: counts with one outmost vertex left free."""
    S: int
    R: int
    T: int
    P: int

    @classmethod
    def from_counts(cls, counts: BoundaryCountVector) -> "AggregateCounts":
        x, y, z, w = counts.as_tuple()
        return cls(S=x + y, R=y + z, T=x + 2 * y + z, P=y + 2 * z + w)

    @root_validator(skip_on_failure=True)
    def check_t_is_s_plus_r(cls, values):
        if values["T"] != values["S"] + values["R"]:
            raise ValueError("aggregate identity T = S + R violated")
        return values


class StageRecord(BaseModel):
    """One row of the computation ledger."""
    family: GraphFamily
    n: int = Field(..., ge=0)
    counts: BoundaryCountVector
    aggregates: AggregateCounts
    m: int

    @root_validator(skip_on_failure=True)
    def check_consistency(cls, values):
        counts = values["counts"]
        if values["m"] != counts.total():
            raise ValueError("m must equal x + 3y + 3z + w")
        if values["aggregates"] != AggregateCounts.from_counts(counts):
            raise ValueError("stored aggregates do not match the counts")
        return values


class RatioState(BaseModel):
    """High-precision ratios alpha = y/x, beta = z/y, gamma = w/z at stage n."""
    family: GraphFamily
    n: int = Field(..., ge=1)
    alpha: mpf
    beta: mpf
    gamma: mpf
    epsilon: mpf
    precision_bits: int = Field(..., gt=0)

    class Config:
        arbitrary_types_allowed = True

    @validator("alpha", "beta", "gamma")
    def check_unit_interval(cls, value):
        if not 0 < value < 1:
            raise ValueError("ratios must lie in (0, 1)")
        return value


class RatioUpdateCoefficients(BaseModel):
    A: mpf
    B: mpf
    C: mpf
    D: mpf

    class Config:
        arbitrary_types_allowed = True

    @root_validator(skip_on_failure=True)
    def check_positive(cls, values):
        if any(values[key] <= 0 for key in ("A", "B", "C", "D")):
            raise ValueError("update coefficients must be strictly positive")
        return values


class FixedPointEnclosure(BaseModel):
    family: GraphFamily
    stage: int
    value: mpf
    radius: mpf
    target_digits: int
    precision_bits: int

    class Config:
        arbitrary_types_allowed = True


class MatchingCountBounds(BaseModel):
    """Natural logs of the two-sided bounds on m(H_n) built from stage k."""
    k: int
    n: int
    log_lower: mpf
    log_upper: mpf
    exact_m: Optional[int] = None
    verdict: Optional[bool] = None
    precision_bits: int

    class Config:
        arbitrary_types_allowed = True


class EntropyBounds(BaseModel):
    family: GraphFamily
    k: int = Field(..., ge=1)
    lower: mpf
    upper: mpf
    agreed_digits: int = Field(..., ge=0)
    precision_bits: int

    class Config:
        arbitrary_types_allowed = True

    @root_validator(skip_on_failure=True)
    def check_interval(cls, values):
        lower, upper = values["lower"], values["upper"]
        if not 0 < lower < upper < 1:
            raise ValueError("entropy bounds must satisfy 0 < lower < upper < 1")
        return values


class EntropyEstimate(BaseModel):
    family: GraphFamily
    k: int
    value: str
    mu_per_vertex: mpf
    mu_per_edge: mpf
    digits: int
    lower: mpf
    upper: mpf
    precision_bits: int

    class Config:
        arbitrary_types_allowed = True


class OracleResult(BaseModel):
    family: Optional[GraphFamily] = None
    stage: Optional[int] = None
    x: int
    y: int
    z: int
    w: int
    m: int
    elapsed: float
    steps: int


class RunConfig(BaseModel):
    """Validated options for one CLI run."""
    family: Optional[GraphFamily] = None
    n: Optional[int] = Field(default=None, ge=0)
    k: Optional[int] = Field(default=None, ge=1)
    precision_bits: int = Field(..., gt=0)
    target_digits: Optional[int] = Field(default=None, gt=0)
    output_format: OutputFormat = OutputFormat.JSON
    oracle_steps: int = Field(..., gt=0)
    oracle_seconds: float = Field(..., gt=0)
    exact_cap: int = Field(..., ge=0)
    build_cap: int = Field(..., ge=0)
    parallel: bool = False
    output: Optional[str] = None

    def families(self) -> List[GraphFamily]:
        if self.family is None:
            return [GraphFamily.HANOI, GraphFamily.SIERPX]
        return [self.family]


class CheckResult(BaseModel):
    check_name: str
    expected: str
    provenance: str
    actual: str
    passed: bool

    def render(self) -> str:
        line = f"{self.check_name} = {self.actual}, {'pass' if self.passed else 'FAIL'}"
        if not self.passed:
            line += f" (expected {self.expected}; {self.provenance})"
        return line


class VerifyReport(BaseModel):
    checks: List[CheckResult] = Field(default_factory=list)
    diagnostics: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)
