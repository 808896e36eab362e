import operator
from dataclasses import dataclass, field
from typing import Annotated, List, Optional
from typing_extensions import TypedDict


@dataclass
class CriterionResult:
    """Outcome of one acceptance criterion"""

    criterion: int
    title: str
    passed: bool
    details: List[str] = field(default_factory=list)
    seconds: float = 0.0


class ReproState(TypedDict):
    # Run selection
    selected: List[int]  # Criterion ids to run, ascending
    corpus_size: int  # Random spanoids in the sandwich corpus
    seed: int  # Global seed every experiment derives from
    workers: int  # Thread fan-out for seeded runs

    # Results, appended by each criterion node
    results: Annotated[List[CriterionResult], operator.add]

    # Processing state
    current_step: str  # Last node that ran
    report: Optional[str]  # Pass/fail table, set by the report node
    error: Optional[str]
