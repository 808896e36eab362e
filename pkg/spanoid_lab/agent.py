import logging
import uuid
from typing import Iterable, Optional

from langgraph.checkpoint.memory import MemorySaver
from langgraph.graph import END, START, StateGraph

from spanoid_lab.edges import STEP_SEQUENCE, after_criterion, after_plan, after_report, node_name
from spanoid_lab.nodes import CRITERION_NODES, plan_node, report_node
from spanoid_lab.state import ReproState

logger = logging.getLogger(__name__)


def build_repro_agent(local_memory=True):
    """Build the acceptance pipeline as a LangGraph state graph"""

    workflow = StateGraph(ReproState)

    workflow.add_node("plan", plan_node)
    for criterion, node in CRITERION_NODES.items():
        workflow.add_node(node_name(criterion), node)
    workflow.add_node("report", report_node)

    workflow.add_edge(START, "plan")

    # Every step may jump to any later criterion or straight to the report
    for index, step in enumerate(STEP_SEQUENCE[:-1]):
        later = {name: name for name in STEP_SEQUENCE[index + 1:]}
        workflow.add_conditional_edges(step, after_plan if step == "plan" else after_criterion, later)

    workflow.add_conditional_edges("report", after_report, {"END": END})

    return workflow.compile(checkpointer=MemorySaver() if local_memory else None)


def run_repro(selected: Optional[Iterable[int]] = None, corpus_size: int = 500, seed: int = 0,
              workers: int = 1, agent=None) -> ReproState:
    """Run the selected criteria (all by default) and return the final state"""
    agent = agent or build_repro_agent(local_memory=True)
    initial: ReproState = {
        "selected": sorted(set(selected)) if selected else [],
        "corpus_size": corpus_size,
        "seed": seed,
        "workers": workers,
        "results": [],
        "current_step": "plan",
        "report": None,
        "error": None,
    }
    config = {"configurable": {"thread_id": f"repro-{uuid.uuid4()}"}, "recursion_limit": 50}
    logger.info(f"Starting repro run (seed {seed}, corpus {corpus_size}, workers {workers})")
    return agent.invoke(initial, config=config)
