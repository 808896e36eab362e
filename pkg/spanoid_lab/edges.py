from spanoid_lab.state import ReproState

STEP_SEQUENCE = [
    "plan",
    "criterion_1",
    "criterion_2",
    "criterion_3",
    "criterion_4",
    "criterion_5",
    "criterion_6",
    "criterion_7",
    "report",
]


def node_name(criterion: int) -> str:
    return f"criterion_{criterion}"


def get_next_step(state: ReproState) -> str:
    """The first selected criterion after the current step, else the report"""
    current_step = state.get("current_step", "plan")
    if current_step == "report":
        return "END"
    try:
        current_index = STEP_SEQUENCE.index(current_step)
    except ValueError:
        return "report"
    selected = {node_name(c) for c in state.get("selected") or []}
    for step in STEP_SEQUENCE[current_index + 1:-1]:
        if step in selected:
            return step
    return "report"


def after_plan(state: ReproState) -> str:
    """Route to the first selected criterion"""
    if state.get("error"):
        return "report"
    return get_next_step(state)


def after_criterion(state: ReproState) -> str:
    """Criteria never stop the run; a failed one is just recorded"""
    return get_next_step(state)


def after_report(state: ReproState) -> str:
    return "END"
